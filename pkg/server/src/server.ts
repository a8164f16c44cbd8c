#!/usr/bin/env node
/**
 * Reference colorizer provider.
 *
 * Runs as a child of the colorization engine and speaks the line-delimited
 * JSON protocol on stdin/stdout: hello/ready handshake, one result (or
 * error) per colorize request, clean exit on shutdown. Use it as the
 * template when wrapping a real model: replace handleColorize and keep
 * the loop.
 *
 *   node dist/server.js --provider sepia
 *   node dist/server.js --provider file_replay --replay-dir /path/to/ab
 *
 * --fault {wrong-dims,garbage,die-mid} injects protocol violations so the
 * engine's error paths can be conformance-tested from the other side of
 * the process boundary.
 */

import { readFileSync, writeFileSync } from 'node:fs';
import { resolve } from 'node:path';
import process from 'node:process';

import { encodeGray16, parsePngHeader } from './png.js';
import { lines, type EngineMessage, type ProviderMessage } from './protocol.js';
import { handleColorize, type ProviderConfig } from './providers.js';

type Fault = 'wrong-dims' | 'garbage' | 'die-mid' | null;

function send(message: ProviderMessage): void {
    process.stdout.write(`${JSON.stringify(message)}\n`);
}

function parseArgs(argv: string[]): { config: ProviderConfig; fault: Fault } {
    let provider: ProviderConfig['provider'] = 'echo_gray';
    let replayDir: string | undefined;
    let fault: Fault = null;
    for (let i = 0; i < argv.length; i += 1) {
        switch (argv[i]) {
            case '--provider':
                provider = argv[++i] as ProviderConfig['provider'];
                break;
            case '--replay-dir':
                replayDir = argv[++i];
                break;
            case '--fault':
                fault = argv[++i] as Fault;
                break;
            default:
                throw new Error(`unknown argument ${argv[i]}`);
        }
    }
    if (!['sepia', 'echo_gray', 'file_replay'].includes(provider)) {
        throw new Error(`unknown provider ${provider}`);
    }
    if (provider === 'file_replay' && !replayDir) {
        throw new Error('file_replay requires --replay-dir');
    }
    return { config: { provider, replayDir }, fault };
}

function faultyReply(fault: Fault, workdir: string, frame: number, lumaPath: string): boolean {
    if (fault === 'garbage') {
        process.stdout.write('not json at all\n');
        return true;
    }
    if (fault === 'die-mid') {
        process.exit(7);
    }
    if (fault === 'wrong-dims') {
        const { width, height } = parsePngHeader(readFileSync(lumaPath));
        const badHeight = Math.max(1, Math.floor(height / 2));
        const samples = new Uint16Array(width * 2 * badHeight).fill(32896);
        const abPath = resolve(workdir, `ab_${String(frame).padStart(5, '0')}.png`);
        writeFileSync(abPath, encodeGray16(samples, width, 2 * badHeight));
        send({ type: 'result', frame, ab: abPath });
        return true;
    }
    return false;
}

async function main(): Promise<number> {
    const { config, fault } = parseArgs(process.argv.slice(2));
    let workdir: string | null = null;

    for await (const line of lines(process.stdin)) {
        let message: EngineMessage;
        try {
            message = JSON.parse(line) as EngineMessage;
        } catch {
            send({ type: 'error', frame: null, message: `unparseable message: ${line}` });
            continue;
        }
        switch (message.type) {
            case 'hello':
                workdir = message.workdir;
                send({ type: 'ready', name: `refserver-${config.provider}` });
                break;
            case 'shutdown':
                return 0;
            case 'colorize': {
                if (workdir === null) {
                    send({ type: 'error', frame: message.frame, message: 'colorize before hello' });
                    break;
                }
                if (faultyReply(fault, workdir, message.frame, message.luma)) break;
                try {
                    const reply = handleColorize(config, workdir, message.frame, message.luma);
                    if (reply.error !== undefined) {
                        send({ type: 'error', frame: message.frame, message: reply.error });
                    } else {
                        send({ type: 'result', frame: message.frame, ab: reply.abPath! });
                    }
                } catch (err) {
                    send({ type: 'error', frame: message.frame, message: String(err) });
                }
                break;
            }
            default:
                send({
                    type: 'error',
                    frame: null,
                    message: `unknown message type ${(message as { type?: string }).type}`,
                });
        }
    }
    return 0; // engine closed our stdin without shutdown; nothing left to do
}

main().then(
    (code) => process.exit(code),
    (err) => {
        process.stderr.write(`refserver: ${err}\n`);
        process.exit(1);
    },
);
