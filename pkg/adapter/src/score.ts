/**
 * Suite scoring: run a classifier over every group of a generated suite and
 * emit the harness predictions CSV.
 *
 * The CSV is the whole contract: header
 * `group_id,image_index,true_label,predicted_label`, integer fields, LF line
 * endings, rows in manifest group order and image index order. All accuracy
 * statistics stay on the harness side; this module only counts matches so
 * its output can be cross-checked.
 */

import * as fs from "fs";
import * as path from "path";

import { EXPECTED_GROUP_COUNT, SuiteManifest, groupDir, loadManifest, readLabels } from "./manifest";
import { decodePng } from "./png";
import { classifyBatch, loadClassifier } from "./model";

export const CSV_HEADER = "group_id,image_index,true_label,predicted_label";

export interface AdapterConfig {
  suiteDir: string;
  /** Path to the saved classifier's model.json. */
  modelPath: string;
  /** Model output index -> suite label index; must cover every suite class. */
  classMapping: Record<number, number>;
  batchSize: number;
  outPath: string;
}

export interface GroupCount {
  groupId: number;
  correct: number;
  total: number;
}

export interface ScoreResult {
  rows: number;
  counts: GroupCount[];
}

export function validateMapping(mapping: Record<number, number>, classCount: number): void {
  const covered = new Set(Object.values(mapping));
  for (let label = 0; label < classCount; label++) {
    if (!covered.has(label)) {
      throw new Error(`class mapping does not cover suite class ${label}`);
    }
  }
}

export async function scoreSuite(cfg: AdapterConfig): Promise<ScoreResult> {
  if (cfg.batchSize < 1) {
    throw new Error(`batch size must be >= 1, got ${cfg.batchSize}`);
  }
  const manifest = loadManifest(cfg.suiteDir);
  validateMapping(cfg.classMapping, manifest.classNames.length);
  const model = await loadClassifier(cfg.modelPath);

  const lines: string[] = [CSV_HEADER];
  const counts: GroupCount[] = [];
  for (const group of manifest.groups) {
    const dir = groupDir(cfg.suiteDir, group);
    const labels = readLabels(dir);
    if (labels.length !== manifest.imagesPerGroup) {
      throw new Error(
        `group ${group.groupId}: ${labels.length} labels, manifest says ${manifest.imagesPerGroup}`
      );
    }
    let correct = 0;
    for (let start = 0; start < labels.length; start += cfg.batchSize) {
      const stop = Math.min(start + cfg.batchSize, labels.length);
      const batch: Float32Array[] = [];
      for (let i = start; i < stop; i++) {
        const img = decodePng(path.join(dir, `${i}.png`), manifest.channels);
        if (img.width !== manifest.width || img.height !== manifest.height) {
          throw new Error(
            `group ${group.groupId} image ${i}: ${img.width}x${img.height}, ` +
              `manifest says ${manifest.width}x${manifest.height}`
          );
        }
        batch.push(img.data);
      }
      const outputs = classifyBatch(
        model, batch, manifest.height, manifest.width, manifest.channels
      );
      outputs.forEach((modelIndex, offset) => {
        const mapped = cfg.classMapping[modelIndex];
        if (mapped === undefined) {
          throw new Error(`model produced unmapped class index ${modelIndex}`);
        }
        const imageIndex = start + offset;
        if (mapped === labels[imageIndex]) {
          correct++;
        }
        lines.push(`${group.groupId},${imageIndex},${labels[imageIndex]},${mapped}`);
      });
    }
    counts.push({ groupId: group.groupId, correct, total: labels.length });
  }
  fs.writeFileSync(cfg.outPath, lines.join("\n") + "\n", "utf-8");
  return { rows: lines.length - 1, counts };
}

export { EXPECTED_GROUP_COUNT, SuiteManifest };
