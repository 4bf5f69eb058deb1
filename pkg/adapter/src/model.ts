/**
 * TensorFlow.js model loading for plain Node processes.
 *
 * The stock `file://` IO handler lives in tfjs-node, which needs a native
 * binary; these handlers read and write the standard layers-model layout
 * (model.json plus binary weight shards) with plain fs calls instead, so any
 * saved tfjs classifier directory works as a model identifier.
 */

import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";

function concatBuffers(buffers: ArrayBuffer[]): ArrayBuffer {
  const total = buffers.reduce((n, b) => n + b.byteLength, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const b of buffers) {
    out.set(new Uint8Array(b), offset);
    offset += b.byteLength;
  }
  return out.buffer;
}

function fileLoadHandler(modelJsonPath: string): tf.io.IOHandler {
  return {
    async load(): Promise<tf.io.ModelArtifacts> {
      const dir = path.dirname(modelJsonPath);
      const doc = JSON.parse(fs.readFileSync(modelJsonPath, "utf-8"));
      const manifest = doc.weightsManifest ?? [];
      const weightSpecs: tf.io.WeightsManifestEntry[] = [];
      const buffers: ArrayBuffer[] = [];
      for (const group of manifest) {
        weightSpecs.push(...group.weights);
        for (const rel of group.paths) {
          const raw = fs.readFileSync(path.join(dir, rel));
          buffers.push(
            raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength)
          );
        }
      }
      return {
        modelTopology: doc.modelTopology,
        format: doc.format,
        generatedBy: doc.generatedBy,
        convertedBy: doc.convertedBy,
        weightSpecs,
        weightData: concatBuffers(buffers),
      };
    },
  };
}

function fileSaveHandler(dir: string): tf.io.IOHandler {
  return {
    async save(artifacts: tf.io.ModelArtifacts): Promise<tf.io.SaveResult> {
      fs.mkdirSync(dir, { recursive: true });
      const weightData = artifacts.weightData!;
      const buffer = Array.isArray(weightData)
        ? concatBuffers(weightData)
        : weightData;
      fs.writeFileSync(path.join(dir, "weights.bin"), Buffer.from(buffer));
      const doc = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: artifacts.convertedBy,
        weightsManifest: [
          { paths: ["weights.bin"], weights: artifacts.weightSpecs },
        ],
      };
      fs.writeFileSync(path.join(dir, "model.json"), JSON.stringify(doc));
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: "JSON",
        },
      };
    },
  };
}

export async function loadClassifier(modelJsonPath: string): Promise<tf.LayersModel> {
  await tf.ready();
  return tf.loadLayersModel(fileLoadHandler(modelJsonPath));
}

export async function saveClassifier(model: tf.LayersModel, dir: string): Promise<void> {
  await model.save(fileSaveHandler(dir));
}

/**
 * Batch classification: images in, argmax model-output indices out.
 * Ties resolve to the lower index (argmax convention).
 */
export function classifyBatch(
  model: tf.LayersModel,
  batch: Float32Array[],
  height: number,
  width: number,
  channels: number
): number[] {
  const flat = new Float32Array(batch.length * height * width * channels);
  batch.forEach((img, i) => flat.set(img, i * height * width * channels));
  return tf.tidy(() => {
    const input = tf.tensor4d(flat, [batch.length, height, width, channels]);
    const logits = model.predict(input) as tf.Tensor;
    return Array.from(logits.argMax(1).dataSync());
  });
}
