import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { loadManifest } from "../src/manifest";
import { saveClassifier } from "../src/model";
import { GroupCount, scoreSuite, validateMapping } from "../src/score";

const IMAGES_PER_GROUP = 20;
const IDENTITY_MAPPING = { 0: 0, 1: 1, 2: 2 };

let workDir: string;
let suiteDir: string;
let modelJson: string;

function harness(args: string[]): string {
  return execFileSync("python3", ["-m", "perturbench.cli", ...args], {
    encoding: "utf-8",
  });
}

/** Fixed-weight classifier: deterministic without any RNG involvement. */
async function buildTestModel(dir: string): Promise<void> {
  await tf.ready();
  const model = tf.sequential();
  model.add(tf.layers.flatten({ inputShape: [32, 32, 3] }));
  model.add(tf.layers.dense({ units: 3, activation: "softmax" }));
  const features = 32 * 32 * 3;
  const kernel = new Float32Array(features * 3);
  for (let i = 0; i < features; i++) {
    for (let j = 0; j < 3; j++) {
      kernel[i * 3 + j] = (((i * 31 + j * 17) % 97) - 48) / 970;
    }
  }
  const bias = new Float32Array([0.01, -0.02, 0.005]);
  model.layers[1].setWeights([
    tf.tensor2d(kernel, [features, 3]),
    tf.tensor1d(bias),
  ]);
  await saveClassifier(model, dir);
}

beforeAll(async () => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), "adapter-test-"));
  suiteDir = path.join(workDir, "suite");
  harness([
    "generate", "--synthetic", "--pool", "60", "--skip", "20",
    "--n", String(IMAGES_PER_GROUP), "--seed", "123", "--out", suiteDir,
  ]);
  const modelDir = path.join(workDir, "model");
  await buildTestModel(modelDir);
  modelJson = path.join(modelDir, "model.json");
});

afterAll(() => {
  fs.rmSync(workDir, { recursive: true, force: true });
});

describe("suite scoring", () => {
  let counts: GroupCount[];
  let csvPath: string;

  beforeAll(async () => {
    csvPath = path.join(workDir, "predictions.csv");
    const result = await scoreSuite({
      suiteDir,
      modelPath: modelJson,
      classMapping: IDENTITY_MAPPING,
      batchSize: 16,
      outPath: csvPath,
    });
    counts = result.counts;
    expect(result.rows).toBe(69 * IMAGES_PER_GROUP);
  });

  it("emits one row per (group, image) plus the header", () => {
    const lines = fs.readFileSync(csvPath, "utf-8").split("\n");
    expect(lines[0]).toBe("group_id,image_index,true_label,predicted_label");
    expect(lines.filter((l) => l.length > 0)).toHaveLength(1 + 69 * IMAGES_PER_GROUP);
    expect(lines[lines.length - 1]).toBe(""); // trailing LF
  });

  it("covers all 69 groups in manifest order", () => {
    expect(counts.map((c) => c.groupId)).toEqual(
      Array.from({ length: 69 }, (_, i) => i + 1)
    );
    for (const c of counts) {
      expect(c.total).toBe(IMAGES_PER_GROUP);
    }
  });

  it("round-trips through the harness with exactly equal accuracies", () => {
    const summaryPath = path.join(workDir, "summary.json");
    harness([
      "summarize", "--predictions", csvPath, "--name", "tfjs-test",
      "--train-group", "clean", "--out", summaryPath,
    ]);
    const summary = JSON.parse(fs.readFileSync(summaryPath, "utf-8"));
    expect(Object.keys(summary.accuracies)).toHaveLength(69);
    for (const c of counts) {
      expect(summary.accuracies[String(c.groupId)]).toBe(
        (100 * c.correct) / c.total
      );
    }
  });

  it("ingests identically with deliberately shuffled row order", () => {
    const lines = fs.readFileSync(csvPath, "utf-8").trimEnd().split("\n");
    const header = lines[0];
    const rows = lines.slice(1);
    // deterministic interleave: reverse halves
    const shuffled = [
      ...rows.slice(rows.length / 2).reverse(),
      ...rows.slice(0, rows.length / 2),
    ];
    const shuffledPath = path.join(workDir, "shuffled.csv");
    fs.writeFileSync(shuffledPath, [header, ...shuffled].join("\n") + "\n");

    const a = path.join(workDir, "summary_a.json");
    const b = path.join(workDir, "summary_b.json");
    harness(["summarize", "--predictions", csvPath, "--name", "x",
             "--train-group", "clean", "--out", a]);
    harness(["summarize", "--predictions", shuffledPath, "--name", "x",
             "--train-group", "clean", "--out", b]);
    const docA = JSON.parse(fs.readFileSync(a, "utf-8"));
    const docB = JSON.parse(fs.readFileSync(b, "utf-8"));
    expect(docB.accuracies).toEqual(docA.accuracies);
    expect(docB.cv).toBe(docA.cv);
  });
});

describe("configuration validation", () => {
  it("rejects a class mapping that misses a suite class", () => {
    expect(() => validateMapping({ 0: 0, 1: 1 }, 3)).toThrow(/class 2/);
    expect(validateMapping(IDENTITY_MAPPING, 3)).toBeUndefined();
  });

  it("rejects a manifest with the wrong group count", () => {
    const broken = path.join(workDir, "broken");
    fs.mkdirSync(broken, { recursive: true });
    const doc = JSON.parse(
      fs.readFileSync(path.join(suiteDir, "manifest.json"), "utf-8")
    );
    doc.groups = doc.groups.slice(0, 68);
    fs.writeFileSync(path.join(broken, "manifest.json"), JSON.stringify(doc));
    expect(() => loadManifest(broken)).toThrow(/68/);
  });

  it("rejects a batch size below one", async () => {
    await expect(
      scoreSuite({
        suiteDir,
        modelPath: modelJson,
        classMapping: IDENTITY_MAPPING,
        batchSize: 0,
        outPath: path.join(workDir, "x.csv"),
      })
    ).rejects.toThrow(/batch size/);
  });
});
