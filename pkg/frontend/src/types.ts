// Wire types for the annotation service (all bodies JSON).

export type AnswerValue = 'yes' | 'no' | 'unsure'

export interface Question {
    node_id: string
    differentia: string
    definition_path: string[]
    stage: 'root_check' | 'child_check'
}

export interface TerminalLabel {
    kind: 'node' | 'discharged'
    node_id: string | null
    differentia_label: string
    category_label: string
}

export interface AnswerEntry {
    node_id: string
    answer: AnswerValue
    at_ms: number
    synthetic?: boolean
    latency_ms?: number
}

export interface SessionInfo {
    session_id: string
    task_id: string
    hierarchy_version: string
    current_node: string
    pending_child_index: number
    answer_log: AnswerEntry[]
    state: 'awaiting_root' | 'descending' | 'terminal'
    result: TerminalLabel | null
    started_at: number
    ended_at: number | null
}

export interface SessionPayload {
    session: SessionInfo
    question: Question | null
    terminal: TerminalLabel | null
    recorded?: boolean
    record_id?: string
}

export interface Task {
    task_id: string
    image_id: string
    region_id: string | null
    crop: [number, number, number, number] | null
}

export interface NextTaskResponse {
    task: Task | null
    session_id: string | null
    remaining: number
}

export interface HierarchyNodeDoc {
    id: string
    parent: string | null
    sense_id: string
    synset: string[]
    category_label: string
    gloss: string
    differentia: string
    visually_checkable: boolean
    definition_path: string[]
    root_genus_term?: string
}

export interface HierarchyDoc {
    root: string
    nodes: HierarchyNodeDoc[]
}

export interface ImageRecordDoc {
    image_id: string
    uri: string
    width: number
    height: number
    regions: { region_id: string; polygon: [number, number][] }[]
    original_label?: string
}

export interface AnnotationRecordDoc {
    record_id: string
    campaign_id: string
    task_id: string
    annotator_id: string
    result: TerminalLabel
    answer_log: AnswerEntry[]
    started_at: number
    ended_at: number
    suggested_label?: string
}

export interface CampaignStats {
    campaign_id: string
    progress: {
        status: string
        n_tasks: number
        n_records: number
        n_annotators: number
        records_per_annotator: Record<string, number>
        n_discharged: number
        n_unsure_stops: number
        n_gold: number
    }
    agreement: {
        alpha: number
        alpha_display: string
        n_units_used: number
        n_units_dropped: number
        annotators: string[]
        per_category_counts: Record<string, Record<string, number>>
    } | null
    agreement_undefined_reason: string | null
    timing: {
        per_annotator: Record<string, { mean_s: number | null; median_s: number | null; count: number }>
        overall_mean_s: number | null
        n_sessions: number
    }
    audit: {
        counts: Record<string, number>
        confusion: { annotated: string; gold: string; outcome: string; count: number }[]
        total: number
    } | null
}

export interface ApiError {
    code: string
    message: string
}
