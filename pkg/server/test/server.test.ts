/**
 * Protocol conformance of the running server, exercised over real pipes.
 */

import { type ChildProcess, spawn } from 'node:child_process';
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { afterEach, beforeAll, describe, expect, it } from 'vitest';

import { decodeGray16, encodeGray16, encodeGray8 } from '../src/png.js';
import { chromaSample } from '../src/providers.js';

const SERVER = fileURLToPath(new URL('../dist/server.js', import.meta.url));

interface Session {
    proc: ChildProcess;
    next: () => Promise<Record<string, unknown>>;
    send: (msg: unknown) => void;
    workdir: string;
}

const sessions: Session[] = [];

function startServer(args: string[]): Session {
    const workdir = mkdtempSync(join(tmpdir(), 'refserver-test-'));
    const proc = spawn('node', [SERVER, ...args], { stdio: ['pipe', 'pipe', 'inherit'] });
    const queue: string[] = [];
    const waiters: Array<(line: string) => void> = [];
    let pending = '';
    proc.stdout!.on('data', (data: Buffer) => {
        pending += data.toString();
        let idx = pending.indexOf('\n');
        while (idx >= 0) {
            const line = pending.slice(0, idx);
            pending = pending.slice(idx + 1);
            const waiter = waiters.shift();
            if (waiter) waiter(line);
            else queue.push(line);
            idx = pending.indexOf('\n');
        }
    });
    const session: Session = {
        proc,
        workdir,
        send: (msg) => proc.stdin!.write(`${JSON.stringify(msg)}\n`),
        next: () =>
            new Promise((resolveLine, reject) => {
                const timer = setTimeout(() => reject(new Error('no reply within 5s')), 5000);
                const deliver = (line: string) => {
                    clearTimeout(timer);
                    resolveLine(JSON.parse(line) as Record<string, unknown>);
                };
                const queued = queue.shift();
                if (queued !== undefined) deliver(queued);
                else waiters.push(deliver);
            }),
    };
    sessions.push(session);
    return session;
}

async function handshake(session: Session): Promise<Record<string, unknown>> {
    session.send({ type: 'hello', version: 1, workdir: session.workdir });
    return session.next();
}

function writeLuma(session: Session, name: string, width = 8, height = 6): string {
    const path = join(session.workdir, name);
    writeFileSync(path, encodeGray8(new Uint8Array(width * height).fill(100), width, height));
    return path;
}

function exited(proc: ChildProcess): Promise<number | null> {
    return new Promise((resolveCode) => proc.on('exit', (code) => resolveCode(code)));
}

beforeAll(() => {
    if (!existsSync(SERVER)) {
        throw new Error('dist/server.js missing; run `npm run build` first');
    }
});

afterEach(() => {
    for (const s of sessions.splice(0)) {
        if (s.proc.exitCode === null) s.proc.kill('SIGKILL');
    }
});

describe('handshake and shutdown', () => {
    it('answers hello with ready and exits 0 on shutdown', async () => {
        const session = startServer(['--provider', 'sepia']);
        const ready = await handshake(session);
        expect(ready).toMatchObject({ type: 'ready', name: 'refserver-sepia' });
        session.send({ type: 'shutdown' });
        expect(await exited(session.proc)).toBe(0);
    });
});

describe('sepia provider', () => {
    it('returns constant warm chroma sized from the luma file', async () => {
        const session = startServer(['--provider', 'sepia']);
        await handshake(session);
        const luma = writeLuma(session, 'luma_00000.png', 10, 7);
        session.send({ type: 'colorize', frame: 0, luma, masks: null, prompt: 'a colorful image' });
        const reply = await session.next();
        expect(reply).toMatchObject({ type: 'result', frame: 0 });
        const decoded = decodeGray16(readFileSync(reply.ab as string));
        expect(decoded.width).toBe(10);
        expect(decoded.height).toBe(14); // A plane stacked above B
        const a = decoded.samples.subarray(0, 70);
        const b = decoded.samples.subarray(70);
        expect(new Set(a)).toEqual(new Set([chromaSample(12)]));
        expect(new Set(b)).toEqual(new Set([chromaSample(24)]));
        session.send({ type: 'shutdown' });
        expect(await exited(session.proc)).toBe(0);
    });

    it('replies one result per request with matching frame indices', async () => {
        const session = startServer(['--provider', 'sepia']);
        await handshake(session);
        for (let t = 0; t < 5; t += 1) {
            const luma = writeLuma(session, `luma_${String(t).padStart(5, '0')}.png`);
            session.send({ type: 'colorize', frame: t, luma, masks: null, prompt: 'p' });
            const reply = await session.next();
            expect(reply.type).toBe('result');
            expect(reply.frame).toBe(t);
        }
    });
});

describe('echo_gray provider', () => {
    it('returns exactly neutral chroma', async () => {
        const session = startServer(['--provider', 'echo_gray']);
        await handshake(session);
        const luma = writeLuma(session, 'luma_00000.png', 4, 4);
        session.send({ type: 'colorize', frame: 0, luma, masks: null, prompt: 'p' });
        const reply = await session.next();
        const decoded = decodeGray16(readFileSync(reply.ab as string));
        // (v / 65535) * 255 - 128 must be exactly 0
        expect(new Set(decoded.samples)).toEqual(new Set([32896]));
    });
});

describe('file_replay provider', () => {
    it('hands back the precomputed file for each frame', async () => {
        const replayDir = mkdtempSync(join(tmpdir(), 'replay-'));
        const canned = encodeGray16(new Uint16Array(4 * 8).fill(chromaSample(33)), 4, 8);
        writeFileSync(join(replayDir, '00002.png'), canned);
        const session = startServer(['--provider', 'file_replay', '--replay-dir', replayDir]);
        await handshake(session);
        const luma = writeLuma(session, 'luma_00002.png', 4, 4);
        session.send({ type: 'colorize', frame: 2, luma, masks: null, prompt: 'p' });
        const reply = await session.next();
        expect(reply.type).toBe('result');
        expect(readFileSync(reply.ab as string).equals(canned)).toBe(true);
    });

    it('reports an error naming the frame when the file is missing', async () => {
        const replayDir = mkdtempSync(join(tmpdir(), 'replay-'));
        const session = startServer(['--provider', 'file_replay', '--replay-dir', replayDir]);
        await handshake(session);
        const luma = writeLuma(session, 'luma_00005.png');
        session.send({ type: 'colorize', frame: 5, luma, masks: null, prompt: 'p' });
        const reply = await session.next();
        expect(reply.type).toBe('error');
        expect(reply.frame).toBe(5);
        expect(String(reply.message)).toMatch(/00005/);
    });
});

describe('malformed input handling', () => {
    it('answers unparseable lines with an error message, not a crash', async () => {
        const session = startServer(['--provider', 'sepia']);
        await handshake(session);
        session.proc.stdin!.write('{{{{ nope\n');
        const reply = await session.next();
        expect(reply.type).toBe('error');
        session.send({ type: 'shutdown' });
        expect(await exited(session.proc)).toBe(0);
    });

    it('reports unreadable luma paths as frame errors', async () => {
        const session = startServer(['--provider', 'sepia']);
        await handshake(session);
        session.send({
            type: 'colorize',
            frame: 3,
            luma: '/does/not/exist.png',
            masks: null,
            prompt: 'p',
        });
        const reply = await session.next();
        expect(reply).toMatchObject({ type: 'error', frame: 3 });
    });
});

describe('fault injection', () => {
    it('die-mid exits without replying', async () => {
        const session = startServer(['--provider', 'sepia', '--fault', 'die-mid']);
        await handshake(session);
        const luma = writeLuma(session, 'luma_00000.png');
        session.send({ type: 'colorize', frame: 0, luma, masks: null, prompt: 'p' });
        expect(await exited(session.proc)).toBe(7);
    });

    it('wrong-dims produces a half-height reply', async () => {
        const session = startServer(['--provider', 'sepia', '--fault', 'wrong-dims']);
        await handshake(session);
        const luma = writeLuma(session, 'luma_00000.png', 8, 6);
        session.send({ type: 'colorize', frame: 0, luma, masks: null, prompt: 'p' });
        const reply = await session.next();
        const decoded = decodeGray16(readFileSync(reply.ab as string));
        expect(decoded.height).toBe(6); // stacked planes for height 3, not 6
    });
});
