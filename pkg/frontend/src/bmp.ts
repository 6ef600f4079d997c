/**
 * Gray image payloads arrive as raw [0,1] pixel arrays; the console renders
 * them as 8-bit grayscale BMP data URLs so no canvas support is needed.
 */

import type { ImagePayload } from "./api.js";

function u16(view: DataView, offset: number, value: number): void {
  view.setUint16(offset, value, true);
}

function u32(view: DataView, offset: number, value: number): void {
  view.setUint32(offset, value, true);
}

/** Encode a row-major [0,1] grayscale image as a BMP byte buffer. */
export function grayToBmpBytes(payload: ImagePayload): Uint8Array {
  const { width, height, pixels } = payload;
  if (pixels.length !== width * height) {
    throw new Error(`pixel count ${pixels.length} != ${width}x${height}`);
  }
  const rowSize = Math.ceil(width / 4) * 4; // rows padded to 4 bytes
  const headerSize = 14 + 40 + 256 * 4;
  const fileSize = headerSize + rowSize * height;
  const bytes = new Uint8Array(fileSize);
  const view = new DataView(bytes.buffer);

  bytes[0] = 0x42; // 'B'
  bytes[1] = 0x4d; // 'M'
  u32(view, 2, fileSize);
  u32(view, 10, headerSize);
  u32(view, 14, 40); // BITMAPINFOHEADER
  u32(view, 18, width);
  u32(view, 22, height);
  u16(view, 26, 1); // planes
  u16(view, 28, 8); // bits per pixel
  u32(view, 34, rowSize * height);
  u32(view, 46, 256); // palette size

  for (let i = 0; i < 256; i += 1) {
    const base = 54 + i * 4;
    bytes[base] = i;
    bytes[base + 1] = i;
    bytes[base + 2] = i;
  }

  for (let y = 0; y < height; y += 1) {
    const srcRow = height - 1 - y; // BMP rows are bottom-up
    for (let x = 0; x < width; x += 1) {
      const value = Math.max(0, Math.min(1, pixels[srcRow * width + x]));
      bytes[headerSize + y * rowSize + x] = Math.round(value * 255);
    }
  }
  return bytes;
}

export function toDataUrl(payload: ImagePayload): string {
  const bytes = grayToBmpBytes(payload);
  let binary = "";
  const chunk = 8192;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return `data:image/bmp;base64,${btoa(binary)}`;
}

/** Saliency/anomaly maps render as a red overlay with per-pixel alpha. */
export function mapToOverlayUrl(width: number, height: number, map: number[]): string {
  // reuse the BMP pathway: encode intensity; the overlay img gets CSS blending
  return toDataUrl({ width, height, pixels: map });
}
