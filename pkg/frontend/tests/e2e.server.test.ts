// End-to-end: the real DOM app against the real annotation service.
// Answers Y,Y,Y,Y over the bundled instrument hierarchy, then verifies that
// (a) every displayed question string equals the stored differentia
// byte-for-byte, and (b) the server-side record's answer log, replayed
// through the core engine, yields the same terminal node the UI showed.

import { afterAll, beforeAll, describe, expect, it } from 'vitest'
import { spawn, spawnSync, type ChildProcess } from 'node:child_process'
import { mkdtempSync, writeFileSync } from 'node:fs'
import net from 'node:net'
import { tmpdir } from 'node:os'
import { dirname, join, resolve } from 'node:path'
import { fileURLToPath } from 'node:url'

import { ApiClient } from '../src/api.js'
import { QuestionView } from '../src/question-view.js'
import type { HierarchyDoc } from '../src/types.js'

const REPO_ROOT = resolve(dirname(fileURLToPath(import.meta.url)), '..', '..')
const FIXTURE = join(REPO_ROOT, 'fixtures', 'musical_instruments.json')
const REPLAY_SCRIPT = join(REPO_ROOT, 'scripts', 'replay_record.py')

let proc: ChildProcess | null = null
let base = ''
let api: ApiClient

function freePort(): Promise<number> {
    return new Promise((resolvePort, reject) => {
        const server = net.createServer()
        server.on('error', reject)
        server.listen(0, '127.0.0.1', () => {
            const port = (server.address() as net.AddressInfo).port
            server.close(() => resolvePort(port))
        })
    })
}

async function until(check: () => boolean, what: string, timeoutMs = 10000): Promise<void> {
    const start = Date.now()
    while (!check()) {
        if (Date.now() - start > timeoutMs) {
            throw new Error(`timed out waiting for ${what}`)
        }
        await new Promise((r) => setTimeout(r, 25))
    }
}

async function waitHealthy(url: string): Promise<void> {
    const start = Date.now()
    for (;;) {
        try {
            const response = await fetch(`${url}/health`)
            if (response.ok) return
        } catch {
            // not up yet
        }
        if (Date.now() - start > 15000) throw new Error('service did not start')
        await new Promise((r) => setTimeout(r, 80))
    }
}

beforeAll(async () => {
    const port = await freePort()
    base = `http://127.0.0.1:${port}`
    const dir = mkdtempSync(join(tmpdir(), 'differentia-e2e-'))
    writeFileSync(
        join(dir, 'serve.toml'),
        `port = ${port}\nhost = "127.0.0.1"\ndata_dir = "data"\nhierarchy = "${FIXTURE}"\n`,
    )
    proc = spawn('python3', ['-m', 'differentia.cli', 'serve', '--config', join(dir, 'serve.toml')], {
        stdio: 'ignore',
    })
    await waitHealthy(base)
    api = new ApiClient(base)
    const images = [
        { image_id: 'img1', uri: 'img1.png', width: 64, height: 64, regions: [] },
        { image_id: 'img2', uri: 'img2.png', width: 64, height: 64, regions: [] },
    ]
    let response = await fetch(`${base}/campaigns`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ campaign_id: 'c1', images, strategy: 'bounding_polygons' }),
    })
    expect(response.status).toBe(201)
    response = await fetch(`${base}/campaigns/c1/open`, { method: 'POST' })
    expect(response.status).toBe(200)
})

afterAll(() => {
    proc?.kill()
})

describe('scripted browser run', () => {
    it('Y,Y,Y,Y lands on Acoustic Guitar and the record replays to 1_1_1_1', async () => {
        const hierarchy: HierarchyDoc = await api.hierarchy('c1')
        const differentiaById = new Map(hierarchy.nodes.map((n) => [n.id, n.differentia]))

        const container = document.createElement('div')
        document.body.appendChild(container)
        const view = new QuestionView(container, api, { campaignId: 'c1', annotatorId: 'human1' })

        const next = await api.nextTask('c1', 'human1')
        expect(next.task?.task_id).toBe('img1')
        await view.startTask(next.task!, next.remaining, next.session_id)

        const seenNodes: string[] = []
        for (let step = 0; step < 4; step++) {
            const question = view.flow.currentQuestion
            expect(question).not.toBeNull()
            seenNodes.push(question!.node_id)
            const stored = differentiaById.get(question!.node_id)!
            const shown = view.element('differentia').textContent ?? ''
            expect(Buffer.from(shown, 'utf8').equals(Buffer.from(stored, 'utf8'))).toBe(true)

            const indexBefore = view.flow.answerIndex
            document.dispatchEvent(new KeyboardEvent('keydown', { key: 'y' }))
            await until(
                () => view.flow.answerIndex > indexBefore || view.flow.terminal !== null,
                `answer ${step} to apply`,
            )
        }

        expect(seenNodes).toEqual(['1', '1_1', '1_1_1', '1_1_1_1'])
        await until(() => view.flow.terminal !== null, 'terminal state')
        expect(view.flow.terminal!.node_id).toBe('1_1_1_1')
        expect(view.element('terminal-category').textContent).toBe('Acoustic Guitar')
        expect(view.element('terminal-differentia').textContent).toBe('with No Input Jack')

        const records = await api.records('c1')
        expect(records.records).toHaveLength(1)
        const record = records.records[0]
        expect(record.annotator_id).toBe('human1')
        expect(record.result.node_id).toBe('1_1_1_1')
        expect(record.answer_log.map((e) => e.answer)).toEqual(['yes', 'yes', 'yes', 'yes'])

        // offline replay through the core engine must reproduce the label
        const replay = spawnSync('python3', [REPLAY_SCRIPT, FIXTURE], {
            input: JSON.stringify(record),
            encoding: 'utf8',
        })
        expect(replay.status).toBe(0)
        expect(replay.stdout.trim()).toBe('1_1_1_1')

        view.dispose()
    })

    it('discharge flow: N at the root confirms Discharged and is recorded', async () => {
        const container = document.createElement('div')
        document.body.appendChild(container)
        const view = new QuestionView(container, api, { campaignId: 'c1', annotatorId: 'human1' })
        const next = await api.nextTask('c1', 'human1')
        expect(next.task?.task_id).toBe('img2')
        await view.startTask(next.task!, next.remaining, next.session_id)
        document.dispatchEvent(new KeyboardEvent('keydown', { key: 'n' }))
        await until(() => view.flow.terminal !== null, 'terminal after root no')
        expect(view.flow.terminal!.kind).toBe('discharged')
        expect(view.element('terminal-category').textContent).toBe('Discharged')
        const records = await api.records('c1')
        const record = records.records.find((r) => r.task_id === 'img2')!
        const replay = spawnSync('python3', [REPLAY_SCRIPT, FIXTURE], {
            input: JSON.stringify(record),
            encoding: 'utf8',
        })
        expect(replay.stdout.trim()).toBe('DISCHARGED')
        view.dispose()
    })

    it('stats dashboard counts match the server after the runs', async () => {
        const stats = await api.stats('c1')
        expect(stats.progress.n_records).toBe(2)
        expect(stats.progress.n_discharged).toBe(1)
    })
})
