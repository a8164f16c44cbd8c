/**
 * Wire types and line framing for the external-colorizer protocol.
 *
 * Messages are one JSON object per line, UTF-8, over the child process's
 * stdin/stdout. Unknown fields are ignored for forward compatibility.
 */

export const PROTOCOL_VERSION = 1;

export interface HelloMessage {
    type: 'hello';
    version: number;
    workdir: string;
}

export interface ColorizeMessage {
    type: 'colorize';
    frame: number;
    luma: string;
    masks: string | null;
    prompt: string;
}

export interface ShutdownMessage {
    type: 'shutdown';
}

export type EngineMessage = HelloMessage | ColorizeMessage | ShutdownMessage;

export interface ReadyMessage {
    type: 'ready';
    name: string;
}

export interface ResultMessage {
    type: 'result';
    frame: number;
    ab: string;
}

export interface ErrorMessage {
    type: 'error';
    frame: number | null;
    message: string;
}

export type ProviderMessage = ReadyMessage | ResultMessage | ErrorMessage;

/** Split an incoming byte stream into complete lines. */
export async function* lines(stream: AsyncIterable<Buffer | string>): AsyncGenerator<string> {
    let pending = '';
    for await (const piece of stream) {
        pending += piece.toString();
        let idx = pending.indexOf('\n');
        while (idx >= 0) {
            const line = pending.slice(0, idx).trim();
            pending = pending.slice(idx + 1);
            if (line.length > 0) yield line;
            idx = pending.indexOf('\n');
        }
    }
    const tail = pending.trim();
    if (tail.length > 0) yield tail;
}
