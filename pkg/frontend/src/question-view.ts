// The live question loop: one pending differentia question at a time, with
// the object highlighted in the image panel. The differentia text is shown
// verbatim; the category label stays hidden until terminal so annotators
// judge visual properties, not names.

import { ApiClient } from './api.js'
import { SessionFlow } from './session.js'
import { drawObjectOverlay, focusBox } from './overlay.js'
import type {
    AnswerValue,
    ImageRecordDoc,
    Question,
    SessionPayload,
    Task,
    TerminalLabel,
} from './types.js'

const KEY_TO_ANSWER: Record<string, AnswerValue> = { y: 'yes', n: 'no', u: 'unsure' }

export interface QuestionViewOptions {
    campaignId: string
    annotatorId: string
    showBreadcrumb?: boolean // off by default to avoid anchoring novices
    onTaskDone?: (terminal: TerminalLabel, payload: SessionPayload) => void
}

export class QuestionView {
    readonly root: HTMLElement
    readonly flow: SessionFlow
    // reassigned per task by the annotate loop
    onTaskDone: ((terminal: TerminalLabel, payload: SessionPayload) => void) | null = null
    private task: Task | null = null
    private remaining = 0
    private answered = 0
    private breadcrumbVisible: boolean
    private keyHandler: (event: KeyboardEvent) => void

    constructor(
        container: HTMLElement,
        private api: ApiClient,
        private options: QuestionViewOptions,
    ) {
        this.breadcrumbVisible = options.showBreadcrumb ?? false
        this.onTaskDone = options.onTaskDone ?? null
        this.root = document.createElement('section')
        this.root.className = 'question-view'
        this.root.innerHTML = `
            <div class="image-panel"><canvas data-testid="image-canvas"></canvas></div>
            <div class="prompt-panel">
                <p class="prompt-lead">Does the highlighted object have this property?</p>
                <h2 class="differentia" data-testid="differentia"></h2>
                <p class="breadcrumb" data-testid="breadcrumb" hidden></p>
                <button type="button" class="breadcrumb-toggle" data-testid="breadcrumb-toggle">
                    reveal definition path</button>
                <div class="answers">
                    <button type="button" data-testid="answer-yes" data-key="Y">Yes</button>
                    <button type="button" data-testid="answer-no" data-key="N">No</button>
                    <button type="button" data-testid="answer-unsure" data-key="U">Unsure</button>
                </div>
                <p class="progress" data-testid="progress"></p>
            </div>
            <div class="terminal-panel" data-testid="terminal" hidden>
                <h2 data-testid="terminal-category"></h2>
                <p data-testid="terminal-differentia"></p>
                <label>Most suitable label (optional):
                    <input type="text" data-testid="suggestion-input" />
                </label>
                <button type="button" data-testid="suggestion-submit">Save label</button>
                <button type="button" data-testid="continue">Next image</button>
            </div>`
        container.appendChild(this.root)
        this.flow = new SessionFlow(api, {
            onQuestion: (question, payload) => this.renderQuestion(question, payload),
            onTerminal: (terminal, payload) => this.renderTerminal(terminal, payload),
            onBusyChange: (busy) => this.setControlsDisabled(busy),
            onError: (error) => this.renderError(error),
        })
        for (const value of ['yes', 'no', 'unsure'] as AnswerValue[]) {
            this.button(`answer-${value}`).addEventListener('click', () => {
                void this.flow.answer(value)
            })
        }
        this.button('breadcrumb-toggle').addEventListener('click', () => this.toggleBreadcrumb())
        this.keyHandler = (event: KeyboardEvent) => {
            const answer = KEY_TO_ANSWER[event.key.toLowerCase()]
            if (answer && !this.flow.isBusy && this.flow.terminal === null) {
                void this.flow.answer(answer)
            }
        }
        document.addEventListener('keydown', this.keyHandler)
    }

    element<T extends HTMLElement>(testId: string): T {
        return this.root.querySelector(`[data-testid="${testId}"]`) as T
    }

    private button(testId: string): HTMLButtonElement {
        return this.element<HTMLButtonElement>(testId)
    }

    dispose(): void {
        document.removeEventListener('keydown', this.keyHandler)
        this.root.remove()
    }

    async startTask(task: Task, remaining: number, resumeSessionId?: string | null): Promise<void> {
        this.task = task
        this.remaining = remaining
        this.answered = 0
        this.element('terminal').hidden = true
        void this.renderImage(task)
        if (resumeSessionId) {
            await this.flow.resume(resumeSessionId)
        } else {
            await this.flow.start(this.options.campaignId, task.task_id, this.options.annotatorId)
        }
    }

    private renderQuestion(question: Question, payload: SessionPayload): void {
        this.answered = payload.session.answer_log.length
        // textContent keeps the differentia byte-for-byte; never innerHTML
        this.element('differentia').textContent = question.differentia
        const breadcrumb = this.element('breadcrumb')
        breadcrumb.textContent = question.definition_path.join(' › ')
        breadcrumb.hidden = !this.breadcrumbVisible
        this.element('progress').textContent =
            `question ${this.answered + 1} · task ${this.task?.task_id ?? ''} · ${this.remaining} tasks left`
        this.element('terminal').hidden = true
    }

    private renderTerminal(terminal: TerminalLabel, payload: SessionPayload): void {
        const panel = this.element('terminal')
        panel.hidden = false
        this.element('terminal-category').textContent = terminal.category_label
        this.element('terminal-differentia').textContent =
            terminal.kind === 'node' ? terminal.differentia_label : 'Not classifiable under the root property'
        this.element('differentia').textContent = ''
        this.element('progress').textContent = payload.recorded ? 'saved' : 'already recorded earlier'
        const save = this.button('suggestion-submit')
        save.onclick = () => {
            const input = this.element<HTMLInputElement>('suggestion-input')
            void this.flow.suggest(input.value)
        }
        this.button('continue').onclick = () => this.onTaskDone?.(terminal, payload)
    }

    private renderError(error: unknown): void {
        this.element('progress').textContent = `error: ${String(error)} (retry your answer)`
    }

    private setControlsDisabled(disabled: boolean): void {
        for (const value of ['yes', 'no', 'unsure']) {
            this.button(`answer-${value}`).disabled = disabled
        }
    }

    private toggleBreadcrumb(): void {
        this.breadcrumbVisible = !this.breadcrumbVisible
        this.element('breadcrumb').hidden = !this.breadcrumbVisible
        this.button('breadcrumb-toggle').textContent = this.breadcrumbVisible
            ? 'hide definition path'
            : 'reveal definition path'
    }

    // Draws the task image and, for region tasks, the polygon overlay with a
    // focus crop around the object. Missing assets degrade to a placeholder.
    private async renderImage(task: Task): Promise<void> {
        const canvas = this.element<HTMLCanvasElement>('image-canvas')
        let ctx: CanvasRenderingContext2D | null = null
        try {
            ctx = canvas.getContext('2d')
        } catch {
            return // canvas unavailable (headless test run)
        }
        if (!ctx) return
        const image = new Image()
        image.crossOrigin = 'anonymous'
        const done = new Promise<boolean>((resolve) => {
            image.onload = () => resolve(true)
            image.onerror = () => resolve(false)
        })
        image.src = this.api.imageUrl(task.image_id, this.options.campaignId)
        const loaded = await done
        if (!loaded) {
            canvas.width = 480
            canvas.height = 320
            ctx.fillStyle = '#23232e'
            ctx.fillRect(0, 0, canvas.width, canvas.height)
            ctx.fillStyle = '#ddd'
            ctx.font = '16px sans-serif'
            ctx.fillText('image unavailable — answer from the task context', 18, 160)
            return
        }
        canvas.width = image.naturalWidth
        canvas.height = image.naturalHeight
        ctx.drawImage(image, 0, 0)
        if (task.region_id) {
            const regions = await this.regionsFor(task.image_id)
            const region = regions.find((r) => r.region_id === task.region_id)
            if (region) {
                drawObjectOverlay(ctx, canvas.width, canvas.height, region.polygon)
                const [x0, y0] = focusBox(region.polygon, canvas.width, canvas.height)
                canvas.parentElement?.scrollTo?.(x0, y0)
            }
        }
    }

    private regionCache: Map<string, ImageRecordDoc['regions']> = new Map()

    private async regionsFor(imageId: string): Promise<ImageRecordDoc['regions']> {
        if (this.regionCache.size === 0) {
            const response = await fetch(
                `${this.api.baseUrl}/campaigns/${this.options.campaignId}/images`,
            )
            const payload = (await response.json()) as { images: ImageRecordDoc[] }
            for (const image of payload.images) {
                this.regionCache.set(image.image_id, image.regions)
            }
        }
        return this.regionCache.get(imageId) ?? []
    }
}
