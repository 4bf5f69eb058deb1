/** PNG decoding into the flat float tensor layout the classifier consumes. */

import * as fs from "fs";
import { PNG } from "pngjs";

export interface DecodedImage {
  width: number;
  height: number;
  channels: number;
  /** Row-major, channel-interleaved intensities scaled to [0, 1]. */
  data: Float32Array;
}

export function decodePng(filePath: string, channels: number): DecodedImage {
  const png = PNG.sync.read(fs.readFileSync(filePath));
  const pixels = png.width * png.height;
  const out = new Float32Array(pixels * channels);
  // pngjs always exposes RGBA; grayscale sources decode with R = G = B
  for (let i = 0; i < pixels; i++) {
    for (let c = 0; c < channels; c++) {
      out[i * channels + c] = png.data[i * 4 + c] / 255;
    }
  }
  return { width: png.width, height: png.height, channels, data: out };
}
