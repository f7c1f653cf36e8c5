// Review console: hierarchy tree browser with per-node galleries of
// classified results, a discharged bin, and agreement/timing dashboards fed
// by the stats endpoint.

import { ApiClient } from './api.js'
import type { AnnotationRecordDoc, CampaignStats, HierarchyDoc, HierarchyNodeDoc } from './types.js'

export function buildChildIndex(doc: HierarchyDoc): Map<string | null, HierarchyNodeDoc[]> {
    // node array order defines sibling order; keep it
    const index = new Map<string | null, HierarchyNodeDoc[]>()
    for (const node of doc.nodes) {
        const siblings = index.get(node.parent) ?? []
        siblings.push(node)
        index.set(node.parent, siblings)
    }
    return index
}

export function recordsByCategory(records: AnnotationRecordDoc[]): Map<string, AnnotationRecordDoc[]> {
    const byCategory = new Map<string, AnnotationRecordDoc[]>()
    for (const record of records) {
        const key = record.result.kind === 'node' ? (record.result.node_id as string) : 'DISCHARGED'
        const bucket = byCategory.get(key) ?? []
        bucket.push(record)
        byCategory.set(key, bucket)
    }
    return byCategory
}

export class ReviewView {
    readonly root: HTMLElement

    constructor(
        container: HTMLElement,
        private api: ApiClient,
        private campaignId: string,
    ) {
        this.root = document.createElement('section')
        this.root.className = 'review-view'
        this.root.innerHTML = `
            <div class="tree" data-testid="tree"></div>
            <div class="gallery" data-testid="gallery"></div>
            <div class="dashboard" data-testid="dashboard"></div>
            <div class="discharged-bin" data-testid="discharged-bin"></div>`
        container.appendChild(this.root)
    }

    async load(): Promise<void> {
        const [hierarchy, records] = await Promise.all([
            this.api.hierarchy(this.campaignId),
            this.api.records(this.campaignId),
        ])
        let stats: CampaignStats | null = null
        try {
            stats = await this.api.stats(this.campaignId)
        } catch {
            stats = null // empty campaigns have no stats yet
        }
        this.renderTree(hierarchy, recordsByCategory(records.records))
        this.renderDashboard(stats)
        this.renderDischarged(recordsByCategory(records.records).get('DISCHARGED') ?? [])
    }

    private renderTree(doc: HierarchyDoc, byCategory: Map<string, AnnotationRecordDoc[]>): void {
        const index = buildChildIndex(doc)
        const tree = this.root.querySelector('[data-testid="tree"]') as HTMLElement
        tree.innerHTML = ''
        const build = (nodeId: string, depth: number): void => {
            const node = doc.nodes.find((n) => n.id === nodeId)
            if (!node) return
            const row = document.createElement('div')
            row.className = 'tree-row'
            row.dataset.nodeId = node.id
            row.style.paddingLeft = `${depth * 18}px`
            const count = (byCategory.get(node.id) ?? []).length
            row.textContent = `${node.id}  ${node.differentia} — ${node.category_label} (${count})`
            row.addEventListener('click', () => this.renderGallery(node, byCategory.get(node.id) ?? []))
            tree.appendChild(row)
            for (const child of index.get(node.id) ?? []) {
                build(child.id, depth + 1)
            }
        }
        build(doc.root, 0)
    }

    private renderGallery(node: HierarchyNodeDoc, records: AnnotationRecordDoc[]): void {
        const gallery = this.root.querySelector('[data-testid="gallery"]') as HTMLElement
        gallery.innerHTML = `<h3>${node.category_label} · ${node.differentia}</h3>`
        for (const record of records) {
            const figure = document.createElement('figure')
            const img = document.createElement('img')
            img.loading = 'lazy'
            img.src = this.api.imageUrl(record.task_id.split('::')[0], this.campaignId)
            img.alt = record.task_id
            const caption = document.createElement('figcaption')
            caption.textContent = `${record.task_id} · ${record.annotator_id}`
            figure.append(img, caption)
            gallery.appendChild(figure)
        }
    }

    private renderDischarged(records: AnnotationRecordDoc[]): void {
        const bin = this.root.querySelector('[data-testid="discharged-bin"]') as HTMLElement
        bin.innerHTML = `<h3>Discharged (${records.length})</h3>`
        for (const record of records) {
            const item = document.createElement('p')
            item.textContent = `${record.task_id} · ${record.annotator_id}`
            bin.appendChild(item)
        }
    }

    private renderDashboard(stats: CampaignStats | null): void {
        const dashboard = this.root.querySelector('[data-testid="dashboard"]') as HTMLElement
        if (!stats) {
            dashboard.textContent = 'No records yet.'
            return
        }
        const alpha = stats.agreement ? stats.agreement.alpha_display : 'undefined'
        const mean = stats.timing.overall_mean_s
        dashboard.innerHTML = `
            <h3>Campaign health</h3>
            <p data-testid="alpha">Krippendorff's alpha: ${alpha}</p>
            <p data-testid="progress">${stats.progress.n_records}/${
                stats.progress.n_tasks * Math.max(1, stats.progress.n_annotators)
            } records · ${stats.progress.n_discharged} discharged · ${
                stats.progress.n_unsure_stops
            } unsure stops</p>
            <p data-testid="timing">mean annotation time: ${
                mean === null ? 'n/a' : mean.toFixed(3) + ' s'
            }</p>`
    }
}
