/**
 * UTF-8 byte offsets vs JS string indices.
 *
 * The protocol addresses source text by byte offset into its UTF-8
 * encoding; JS strings are UTF-16, so the two drift apart on any
 * non-ASCII character. Everything that touches a protocol Span goes
 * through this module, and source splices happen on the byte level so
 * the editor buffer stays byte-identical to the server's.
 */

const encoder = new TextEncoder();
const decoder = new TextDecoder("utf-8");

function codePointUtf8Length(cp: number): number {
  if (cp < 0x80) return 1;
  if (cp < 0x800) return 2;
  if (cp < 0x10000) return 3;
  return 4;
}

/** Precomputed byte offset of every UTF-16 index of one string. */
export class ByteIndex {
  private readonly byteAt: Uint32Array;

  constructor(readonly text: string) {
    // byteAt[i] = byte offset of the character at UTF-16 index i;
    // the trailing entry is the total byte length.
    const byteAt = new Uint32Array(text.length + 1);
    let bytes = 0;
    let i = 0;
    while (i < text.length) {
      const cp = text.codePointAt(i) as number;
      const units = cp > 0xffff ? 2 : 1;
      byteAt[i] = bytes;
      if (units === 2) byteAt[i + 1] = bytes; // inside a surrogate pair
      bytes += codePointUtf8Length(cp);
      i += units;
    }
    byteAt[text.length] = bytes;
    this.byteAt = byteAt;
  }

  get byteLength(): number {
    return this.byteAt[this.text.length] as number;
  }

  charToByte(charIndex: number): number {
    if (charIndex < 0 || charIndex > this.text.length) {
      throw new RangeError(`char index ${charIndex} out of range`);
    }
    return this.byteAt[charIndex] as number;
  }

  /**
   * UTF-16 index of the character containing the given byte offset
   * (the exact start for offsets the server produces; spans never
   * split a character).
   */
  byteToChar(byteOffset: number): number {
    const arr = this.byteAt;
    if (byteOffset <= 0) return 0;
    if (byteOffset >= this.byteLength) return this.text.length;
    // binary search for the last index with byteAt[index] <= offset
    let lo = 0;
    let hi = this.text.length;
    while (lo < hi) {
      const mid = (lo + hi + 1) >> 1;
      if ((arr[mid] as number) <= byteOffset) lo = mid;
      else hi = mid - 1;
    }
    // land on the lead unit of a surrogate pair
    while (lo > 0 && arr[lo - 1] === arr[lo]) lo--;
    return lo;
  }
}

/** Replace the byte range [start, end) of `source` with `replacement`. */
export function spliceBytes(
  source: string,
  start: number,
  end: number,
  replacement: string,
): string {
  const bytes = encoder.encode(source);
  if (start < 0 || end < start || end > bytes.length) {
    throw new RangeError(`byte span ${start}..${end} out of range 0..${bytes.length}`);
  }
  const insert = encoder.encode(replacement);
  const out = new Uint8Array(bytes.length - (end - start) + insert.length);
  out.set(bytes.subarray(0, start), 0);
  out.set(insert, start);
  out.set(bytes.subarray(end), start + insert.length);
  return decoder.decode(out);
}

export function utf8Length(text: string): number {
  return encoder.encode(text).length;
}
