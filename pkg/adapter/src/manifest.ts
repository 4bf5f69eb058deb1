/**
 * Reader for the harness suite manifest and group directory layout.
 *
 * The manifest is the adapter's only contract with the suite generator:
 * `<suite>/manifest.json` plus one `<group_id>_<name>/` directory per group
 * containing `<index>.png` files and a `labels.txt` with one integer label
 * per line.
 */

import * as fs from "fs";
import * as path from "path";

export interface GroupEntry {
  groupId: number;
  name: string;
  family: string;
}

export interface SuiteManifest {
  specVersion: string;
  masterSeed: number;
  imagesPerGroup: number;
  width: number;
  height: number;
  channels: number;
  classNames: string[];
  groups: GroupEntry[];
}

export const EXPECTED_GROUP_COUNT = 69;

export function loadManifest(suiteDir: string): SuiteManifest {
  const manifestPath = path.join(suiteDir, "manifest.json");
  const doc = JSON.parse(fs.readFileSync(manifestPath, "utf-8"));
  const source = doc.source;
  if (!source || !Array.isArray(doc.groups)) {
    throw new Error(`${manifestPath}: missing source or groups`);
  }
  if (doc.groups.length !== EXPECTED_GROUP_COUNT) {
    throw new Error(
      `${manifestPath}: expected ${EXPECTED_GROUP_COUNT} groups, found ${doc.groups.length}`
    );
  }
  const groups: GroupEntry[] = doc.groups.map((g: any) => {
    if (typeof g.group_id !== "number" || typeof g.name !== "string") {
      throw new Error(`${manifestPath}: malformed group entry`);
    }
    return { groupId: g.group_id, name: g.name, family: String(g.family) };
  });
  groups.sort((a, b) => a.groupId - b.groupId);
  return {
    specVersion: String(doc.spec_version),
    masterSeed: Number(doc.master_seed),
    imagesPerGroup: Number(source.images_per_group),
    width: Number(source.width),
    height: Number(source.height),
    channels: Number(source.channels),
    classNames: (source.class_names as string[]).map(String),
    groups,
  };
}

export function groupDir(suiteDir: string, group: GroupEntry): string {
  return path.join(suiteDir, `${group.groupId}_${group.name}`);
}

export function readLabels(dir: string): number[] {
  const raw = fs.readFileSync(path.join(dir, "labels.txt"), "utf-8");
  return raw
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => {
      const value = Number(line);
      if (!Number.isInteger(value) || value < 0) {
        throw new Error(`labels.txt: bad label ${JSON.stringify(line)}`);
      }
      return value;
    });
}
