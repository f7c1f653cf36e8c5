// Typed client for the campaign service. The UI never computes labels; every
// state transition comes back from the server.

import type {
    AnswerValue,
    CampaignStats,
    HierarchyDoc,
    NextTaskResponse,
    AnnotationRecordDoc,
    SessionPayload,
} from './types.js'

export class ApiRequestError extends Error {
    constructor(
        public status: number,
        public code: string,
        message: string,
    ) {
        super(message)
    }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ApiClient {
    private fetchImpl: FetchLike

    constructor(
        public baseUrl: string = '',
        fetchImpl?: FetchLike,
    ) {
        this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init))
    }

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        const init: RequestInit = { method, headers: { 'Content-Type': 'application/json' } }
        if (body !== undefined) {
            init.body = JSON.stringify(body)
        }
        const response = await this.fetchImpl(this.baseUrl + path, init)
        if (!response.ok) {
            let code = 'http-error'
            let message = `${method} ${path} failed with ${response.status}`
            try {
                const payload = await response.json()
                code = payload.code ?? code
                message = payload.message ?? message
            } catch {
                // non-JSON error body; keep the generic message
            }
            throw new ApiRequestError(response.status, code, message)
        }
        return (await response.json()) as T
    }

    nextTask(campaignId: string, annotator: string): Promise<NextTaskResponse> {
        const query = new URLSearchParams({ annotator })
        return this.request('GET', `/campaigns/${campaignId}/tasks/next?${query}`)
    }

    startSession(campaignId: string, taskId: string, annotatorId: string): Promise<SessionPayload> {
        return this.request('POST', '/sessions', {
            campaign_id: campaignId,
            task_id: taskId,
            annotator_id: annotatorId,
        })
    }

    getSession(sessionId: string): Promise<SessionPayload> {
        return this.request('GET', `/sessions/${sessionId}/question`)
    }

    // Answer posts are idempotent: the server ignores an index it has already
    // applied, so a retried POST after a network failure cannot double-answer.
    submitAnswer(
        sessionId: string,
        value: AnswerValue,
        index: number,
        latencyMs?: number,
    ): Promise<SessionPayload> {
        return this.request('POST', `/sessions/${sessionId}/answer`, {
            value,
            index,
            latency_ms: latencyMs,
        })
    }

    submitSuggestion(sessionId: string, text: string): Promise<{ ok: boolean }> {
        return this.request('POST', `/sessions/${sessionId}/suggestion`, { text })
    }

    hierarchy(campaignId: string): Promise<HierarchyDoc> {
        return this.request('GET', `/campaigns/${campaignId}/hierarchy`)
    }

    stats(campaignId: string): Promise<CampaignStats> {
        return this.request('GET', `/campaigns/${campaignId}/stats`)
    }

    records(campaignId: string): Promise<{ records: AnnotationRecordDoc[] }> {
        return this.request('GET', `/campaigns/${campaignId}/records`)
    }

    imageUrl(imageId: string, campaignId?: string, crop?: [number, number, number, number]): string {
        const params = new URLSearchParams()
        if (campaignId) params.set('campaign', campaignId)
        if (crop) params.set('crop', crop.join(','))
        const query = params.toString()
        return `${this.baseUrl}/images/${imageId}${query ? '?' + query : ''}`
    }
}
