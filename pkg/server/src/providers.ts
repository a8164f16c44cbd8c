/**
 * The three built-in providers.
 *
 * sepia and echo_gray synthesize constant-chroma replies sized from the
 * engine's luma file; file_replay hands back precomputed chroma files by
 * frame index, which is how offline outputs of a real colorization model
 * get plugged into a pipeline run. All of them are deliberately model
 * free so the protocol can be exercised with no weights on disk.
 */

import { readFileSync, existsSync } from 'node:fs';
import { writeFileSync } from 'node:fs';
import { resolve } from 'node:path';

import { encodeGray16, parsePngHeader } from './png.js';

/** Sample value encoding chroma c: v = (c + 128) * 65535 / 255, exact for integers. */
export function chromaSample(chroma: number): number {
    return Math.round(((chroma + 128.0) * 65535.0) / 255.0);
}

export const SEPIA_CHROMA = { a: 12, b: 24 } as const;

export interface ProviderConfig {
    provider: 'sepia' | 'echo_gray' | 'file_replay';
    replayDir?: string;
}

export interface ProviderReply {
    abPath?: string;
    error?: string;
}

function constantAbFile(
    lumaPath: string,
    workdir: string,
    frame: number,
    a: number,
    b: number,
): string {
    const header = parsePngHeader(readFileSync(lumaPath));
    const { width, height } = header;
    const samples = new Uint16Array(width * 2 * height);
    samples.fill(chromaSample(a), 0, width * height);
    samples.fill(chromaSample(b), width * height);
    const abPath = resolve(workdir, `ab_${String(frame).padStart(5, '0')}.png`);
    writeFileSync(abPath, encodeGray16(samples, width, 2 * height));
    return abPath;
}

export function handleColorize(
    config: ProviderConfig,
    workdir: string,
    frame: number,
    lumaPath: string,
): ProviderReply {
    switch (config.provider) {
        case 'sepia':
            return {
                abPath: constantAbFile(lumaPath, workdir, frame, SEPIA_CHROMA.a, SEPIA_CHROMA.b),
            };
        case 'echo_gray':
            return { abPath: constantAbFile(lumaPath, workdir, frame, 0, 0) };
        case 'file_replay': {
            const name = `${String(frame).padStart(5, '0')}.png`;
            const path = resolve(config.replayDir!, name);
            if (!existsSync(path)) {
                return { error: `no replay file ${name} in ${config.replayDir}` };
            }
            return { abPath: path };
        }
    }
}
