/**
 * Minimal PNG support for the reference provider.
 *
 * The provider only ever needs three things: the dimensions of the
 * engine's luma files (header parse, no decode), writing 16-bit grayscale
 * chroma interchange files, and decoding 16-bit grayscale files in tests.
 * Nothing else of PNG is implemented.
 */

import { deflateSync, inflateSync } from 'node:zlib';

const PNG_SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const crc32 = (() => {
    const table = new Int32Array(256);
    for (let n = 0; n < 256; n += 1) {
        let c = n;
        for (let i = 0; i < 8; i += 1) c = c & 1 ? -306674912 ^ (c >>> 1) : c >>> 1;
        table[n] = c;
    }
    return (buf: Uint8Array): number => {
        let c = -1;
        for (let i = 0; i < buf.length; i += 1) c = (c >>> 8) ^ table[(c ^ buf[i]!) & 0xff]!;
        return (c ^ -1) >>> 0;
    };
})();

export interface PngHeader {
    width: number;
    height: number;
    bitDepth: number;
    colorType: number;
}

export function parsePngHeader(data: Buffer): PngHeader {
    if (data.length < 33 || !data.subarray(0, 8).equals(PNG_SIGNATURE)) {
        throw new Error('not a PNG file');
    }
    if (data.toString('latin1', 12, 16) !== 'IHDR') {
        throw new Error('missing IHDR chunk');
    }
    const width = data.readUInt32BE(16);
    const height = data.readUInt32BE(20);
    if (width < 1 || height < 1) throw new Error(`bad dimensions ${width}x${height}`);
    return { width, height, bitDepth: data[24]!, colorType: data[25]! };
}

function chunk(type: string, payload: Buffer): Buffer {
    const head = Buffer.alloc(8);
    head.writeUInt32BE(payload.length, 0);
    head.write(type, 4, 'latin1');
    const crc = Buffer.alloc(4);
    crc.writeUInt32BE(crc32(Buffer.concat([head.subarray(4), payload])), 0);
    return Buffer.concat([head, payload, crc]);
}

/** Encode a 16-bit grayscale PNG (filter 0 rows, big-endian samples). */
export function encodeGray16(samples: Uint16Array, width: number, height: number): Buffer {
    if (samples.length !== width * height) {
        throw new Error(`sample count ${samples.length} != ${width}x${height}`);
    }
    const ihdr = Buffer.alloc(13);
    ihdr.writeUInt32BE(width, 0);
    ihdr.writeUInt32BE(height, 4);
    ihdr[8] = 16; // bit depth
    ihdr[9] = 0; // grayscale
    const stride = width * 2;
    const raw = Buffer.alloc(height * (stride + 1));
    for (let y = 0; y < height; y += 1) {
        const row = y * (stride + 1);
        raw[row] = 0; // filter type: none
        for (let x = 0; x < width; x += 1) {
            raw.writeUInt16BE(samples[y * width + x]!, row + 1 + x * 2);
        }
    }
    return Buffer.concat([
        PNG_SIGNATURE,
        chunk('IHDR', ihdr),
        chunk('IDAT', deflateSync(raw)),
        chunk('IEND', Buffer.alloc(0)),
    ]);
}

/** Encode an 8-bit grayscale PNG (used for luma fixtures in tests). */
export function encodeGray8(samples: Uint8Array, width: number, height: number): Buffer {
    if (samples.length !== width * height) {
        throw new Error(`sample count ${samples.length} != ${width}x${height}`);
    }
    const ihdr = Buffer.alloc(13);
    ihdr.writeUInt32BE(width, 0);
    ihdr.writeUInt32BE(height, 4);
    ihdr[8] = 8;
    ihdr[9] = 0;
    const raw = Buffer.alloc(height * (width + 1));
    for (let y = 0; y < height; y += 1) {
        raw[y * (width + 1)] = 0;
        raw.set(samples.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
    }
    return Buffer.concat([
        PNG_SIGNATURE,
        chunk('IHDR', ihdr),
        chunk('IDAT', deflateSync(raw)),
        chunk('IEND', Buffer.alloc(0)),
    ]);
}

function paeth(a: number, b: number, c: number): number {
    const p = a + b - c;
    const pa = Math.abs(p - a);
    const pb = Math.abs(p - b);
    const pc = Math.abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    return pb <= pc ? b : c;
}

/** Decode a 16-bit grayscale PNG (all five scanline filters, no interlace). */
export function decodeGray16(data: Buffer): { width: number; height: number; samples: Uint16Array } {
    const header = parsePngHeader(data);
    if (header.bitDepth !== 16 || header.colorType !== 0) {
        throw new Error(`expected 16-bit grayscale, got depth ${header.bitDepth} type ${header.colorType}`);
    }
    const idat: Buffer[] = [];
    let offset = 8;
    while (offset + 8 <= data.length) {
        const length = data.readUInt32BE(offset);
        const type = data.toString('latin1', offset + 4, offset + 8);
        if (type === 'IDAT') idat.push(data.subarray(offset + 8, offset + 8 + length));
        if (type === 'IEND') break;
        offset += 12 + length;
    }
    const raw = inflateSync(Buffer.concat(idat));
    const { width, height } = header;
    const stride = width * 2;
    if (raw.length !== height * (stride + 1)) {
        throw new Error(`decoded size ${raw.length} != expected ${height * (stride + 1)}`);
    }
    const out = Buffer.alloc(height * stride);
    const bpp = 2;
    for (let y = 0; y < height; y += 1) {
        const filter = raw[y * (stride + 1)]!;
        const row = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
        const cur = out.subarray(y * stride, (y + 1) * stride);
        const prev = y > 0 ? out.subarray((y - 1) * stride, y * stride) : null;
        for (let i = 0; i < stride; i += 1) {
            const left = i >= bpp ? cur[i - bpp]! : 0;
            const up = prev ? prev[i]! : 0;
            const upLeft = prev && i >= bpp ? prev[i - bpp]! : 0;
            let value = row[i]!;
            switch (filter) {
                case 0: break;
                case 1: value = (value + left) & 0xff; break;
                case 2: value = (value + up) & 0xff; break;
                case 3: value = (value + ((left + up) >> 1)) & 0xff; break;
                case 4: value = (value + paeth(left, up, upLeft)) & 0xff; break;
                default: throw new Error(`unsupported scanline filter ${filter}`);
            }
            cur[i] = value;
        }
    }
    const samples = new Uint16Array(width * height);
    for (let i = 0; i < samples.length; i += 1) samples[i] = out.readUInt16BE(i * 2);
    return { width, height, samples };
}
