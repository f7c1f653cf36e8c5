// Session flow controller: fetch question, post answer, repeat to terminal.
// One active flow per tab; the server session state is the source of truth,
// so a dropped connection resumes by re-fetching the pending question.

import { ApiClient } from './api.js'
import type { AnswerValue, Question, SessionPayload, TerminalLabel } from './types.js'

export interface FlowEvents {
    onQuestion?: (question: Question, payload: SessionPayload) => void
    onTerminal?: (terminal: TerminalLabel, payload: SessionPayload) => void
    onBusyChange?: (busy: boolean) => void
    onError?: (error: unknown) => void
}

export class SessionFlow {
    private payload: SessionPayload | null = null
    private busy = false
    private questionShownAt = 0

    constructor(
        private api: ApiClient,
        private events: FlowEvents = {},
        private now: () => number = () => Date.now(),
    ) {}

    get sessionId(): string | null {
        return this.payload?.session.session_id ?? null
    }

    get currentQuestion(): Question | null {
        return this.payload?.question ?? null
    }

    get terminal(): TerminalLabel | null {
        return this.payload?.terminal ?? null
    }

    get isBusy(): boolean {
        return this.busy
    }

    // Number of answers already applied; doubles as the idempotency index of
    // the next answer.
    get answerIndex(): number {
        return this.payload?.session.answer_log.length ?? 0
    }

    async start(campaignId: string, taskId: string, annotatorId: string): Promise<SessionPayload> {
        this.payload = await this.api.startSession(campaignId, taskId, annotatorId)
        this.emitState()
        return this.payload
    }

    async resume(sessionId: string): Promise<SessionPayload> {
        this.payload = await this.api.getSession(sessionId)
        this.emitState()
        return this.payload
    }

    async answer(value: AnswerValue): Promise<void> {
        if (!this.payload || this.busy || this.payload.terminal !== null) {
            return
        }
        const sessionId = this.payload.session.session_id
        const index = this.answerIndex
        const latency = Math.max(0, this.now() - this.questionShownAt)
        this.setBusy(true)
        try {
            try {
                this.payload = await this.api.submitAnswer(sessionId, value, index, latency)
            } catch (error) {
                if (error instanceof TypeError) {
                    // network failure: the index makes one blind retry safe
                    this.payload = await this.api.submitAnswer(sessionId, value, index, latency)
                } else {
                    throw error
                }
            }
            this.emitState()
        } catch (error) {
            this.events.onError?.(error)
        } finally {
            this.setBusy(false)
        }
    }

    async suggest(text: string): Promise<void> {
        const sessionId = this.sessionId
        if (sessionId && text.trim()) {
            await this.api.submitSuggestion(sessionId, text)
        }
    }

    private setBusy(busy: boolean): void {
        this.busy = busy
        this.events.onBusyChange?.(busy)
    }

    private emitState(): void {
        if (!this.payload) return
        if (this.payload.terminal !== null) {
            this.events.onTerminal?.(this.payload.terminal, this.payload)
        } else if (this.payload.question !== null) {
            this.questionShownAt = this.now()
            this.events.onQuestion?.(this.payload.question, this.payload)
        }
    }
}
