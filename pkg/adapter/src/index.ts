export { AdapterConfig, GroupCount, ScoreResult, CSV_HEADER, scoreSuite, validateMapping } from "./score";
export { SuiteManifest, GroupEntry, loadManifest, groupDir, readLabels } from "./manifest";
export { loadClassifier, saveClassifier, classifyBatch } from "./model";
export { decodePng } from "./png";
