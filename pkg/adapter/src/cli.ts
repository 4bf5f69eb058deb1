#!/usr/bin/env node
/**
 * Command line wrapper: score every group of a suite with a saved
 * TensorFlow.js classifier and write the harness predictions CSV.
 */

import * as fs from "fs";
import { parseArgs } from "node:util";

import { scoreSuite } from "./score";

function usage(): never {
  console.error(
    "usage: perturbench-adapter --suite <dir> --model <model.json> " +
      "--out <predictions.csv> [--mapping <mapping.json>] [--batch <n>]"
  );
  process.exit(2);
}

async function main(): Promise<void> {
  let values: Record<string, string | undefined>;
  try {
    ({ values } = parseArgs({
      options: {
        suite: { type: "string" },
        model: { type: "string" },
        out: { type: "string" },
        mapping: { type: "string" },
        batch: { type: "string", default: "32" },
      },
    }) as { values: Record<string, string | undefined> });
  } catch {
    usage();
  }
  if (!values.suite || !values.model || !values.out) {
    usage();
  }
  // default mapping: model output i is suite label i
  let classMapping: Record<number, number> = {};
  if (values.mapping) {
    const doc = JSON.parse(fs.readFileSync(values.mapping, "utf-8"));
    for (const [key, value] of Object.entries(doc)) {
      classMapping[Number(key)] = Number(value);
    }
  } else {
    for (let i = 0; i < 1024; i++) {
      classMapping[i] = i;
    }
  }
  const result = await scoreSuite({
    suiteDir: values.suite!,
    modelPath: values.model!,
    classMapping,
    batchSize: Number(values.batch),
    outPath: values.out!,
  });
  console.log(`wrote ${result.rows} predictions to ${values.out}`);
}

main().catch((err) => {
  console.error(`error: ${err.message ?? err}`);
  process.exit(1);
});
