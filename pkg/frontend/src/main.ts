// App bootstrap. Query parameters select the console:
//   ?view=annotate&campaign=c1&annotator=a1   — the question loop
//   ?view=review&campaign=c1                  — hierarchy browser + dashboards

import { ApiClient } from './api.js'
import { QuestionView } from './question-view.js'
import { ReviewView } from './review.js'

export interface AnnotateSummary {
    completed: number
    stopped: 'all-done' | 'error'
}

export async function runAnnotateLoop(
    container: HTMLElement,
    api: ApiClient,
    campaignId: string,
    annotatorId: string,
): Promise<AnnotateSummary> {
    let completed = 0
    const view = new QuestionView(container, api, { campaignId, annotatorId })
    try {
        for (;;) {
            const next = await api.nextTask(campaignId, annotatorId)
            if (!next.task) {
                container.insertAdjacentHTML(
                    'beforeend',
                    '<p class="all-done" data-testid="all-done">All assigned tasks are annotated.</p>',
                )
                return { completed, stopped: 'all-done' }
            }
            const taskDone = new Promise<void>((resolve) => {
                view.onTaskDone = () => resolve()
            })
            await view.startTask(next.task, next.remaining, next.session_id)
            await taskDone
            completed += 1
        }
    } finally {
        view.dispose()
    }
}

export function bootstrap(root: HTMLElement = document.getElementById('app') as HTMLElement): void {
    const params = new URLSearchParams(window.location.search)
    const api = new ApiClient('')
    const campaign = params.get('campaign') ?? ''
    if (!campaign) {
        root.innerHTML = '<p>Pass ?campaign=&lt;id&gt; (and ?annotator=&lt;id&gt; to annotate).</p>'
        return
    }
    if ((params.get('view') ?? 'annotate') === 'review') {
        const review = new ReviewView(root, api, campaign)
        void review.load()
    } else {
        const annotator = params.get('annotator') ?? ''
        if (!annotator) {
            root.innerHTML = '<p>Pass ?annotator=&lt;your id&gt; to start annotating.</p>'
            return
        }
        void runAnnotateLoop(root, api, campaign, annotator)
    }
}

// auto-boot only in a real browser page, not under test imports
if (typeof window !== 'undefined' && typeof document !== 'undefined' && document.getElementById('app')) {
    bootstrap()
}
