/**
 * Walk a SAM-40 recording tree, read each trial's MAT file, and emit the
 * CSV-trial + JSON-manifest layout the analysis pipeline ingests.
 *
 * The relaxation task maps to the "relaxed" label; the three stress-inducing
 * tasks (Stroop, arithmetic, mirror image) map to "stressed". Values are
 * copied verbatim: no filtering, no normalization, no rescaling.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { MatVariable, readMat, toRowMajor } from "./mat.js";

/** Output channel order; matches the analysis pipeline's bundled 32-channel layout. */
export const DEFAULT_CHANNEL_ORDER: string[] = [
  "Cz", "Fz", "Fp1", "F7", "F3", "FC1", "C3", "FC5", "FT9", "T7",
  "CP5", "CP1", "P3", "P7", "PO9", "O1", "Pz", "Oz", "O2", "PO10",
  "P8", "P4", "CP2", "CP6", "T8", "FT10", "FC6", "C4", "FC2", "F4",
  "F8", "Fp2",
];

export interface ConvertOptions {
  channels?: number;
  samples?: number;
  /** Channel names in the order the source files store rows; used to reorder
   *  rows into DEFAULT_CHANNEL_ORDER. Omit when the source already matches. */
  channelOrder?: string[];
}

export interface SkippedFile {
  file: string;
  reason: string;
}

export interface ManifestEntry {
  id: string;
  file: string;
  label: "relaxed" | "stressed";
}

export interface ConvertResult {
  converted: ManifestEntry[];
  skipped: SkippedFile[];
  manifestPath: string;
}

const STRESS_TASKS = ["stroop", "arithmetic", "mirror"];

export function labelForFileName(fileName: string): "relaxed" | "stressed" | null {
  const lower = fileName.toLowerCase();
  if (lower.includes("relax")) return "relaxed";
  if (STRESS_TASKS.some((task) => lower.includes(task))) return "stressed";
  return null;
}

export function findMatFiles(root: string): string[] {
  const found: string[] = [];
  const walk = (dir: string) => {
    for (const entry of fs.readdirSync(dir, { withFileTypes: true })) {
      const full = path.join(dir, entry.name);
      if (entry.isDirectory()) {
        walk(full);
      } else if (entry.isFile() && entry.name.toLowerCase().endsWith(".mat")) {
        found.push(full);
      }
    }
  };
  walk(root);
  return found.sort();
}

/** Pick the trial matrix: a variable named Data when present, else the first 2-D one. */
export function pickTrialVariable(variables: MatVariable[]): MatVariable {
  const twoDee = variables.filter((v) => v.dims.length === 2 && v.dims[0] > 0 && v.dims[1] > 0);
  if (twoDee.length === 0) {
    throw new Error("no 2-D numeric variable found");
  }
  const named = twoDee.find((v) => v.name.toLowerCase() === "data");
  return named ?? twoDee[0];
}

/** Orient to channels x samples, transposing when the file stores samples first. */
export function orientMatrix(
  variable: MatVariable,
  channels: number,
  samples: number,
): number[][] {
  const [d0, d1] = variable.dims;
  const rowMajor = toRowMajor(variable);
  if (d0 === channels && d1 === samples) {
    return rowMajor;
  }
  if (d0 === samples && d1 === channels) {
    const transposed: number[][] = [];
    for (let c = 0; c < channels; c++) {
      transposed.push(rowMajor.map((row) => row[c]));
    }
    return transposed;
  }
  throw new Error(
    `expected ${channels}x${samples} (or transposed), got ${d0}x${d1}`,
  );
}

function reorderRows(rows: number[][], sourceOrder: string[]): number[][] {
  if (sourceOrder.length !== rows.length) {
    throw new Error(
      `channel-order lists ${sourceOrder.length} names for ${rows.length} rows`,
    );
  }
  return DEFAULT_CHANNEL_ORDER.map((name) => {
    const idx = sourceOrder.indexOf(name);
    if (idx < 0) {
      throw new Error(`channel ${name} missing from channel-order file`);
    }
    return rows[idx];
  });
}

/** Serialize with JavaScript's shortest round-trip float formatting: exact. */
export function rowsToCsv(rows: number[][]): string {
  return rows.map((row) => row.map((v) => String(v)).join(",")).join("\n") + "\n";
}

export function convert(
  inputDir: string,
  outputDir: string,
  options: ConvertOptions = {},
  log: (msg: string) => void = (msg) => console.warn(msg),
): ConvertResult {
  const channels = options.channels ?? 32;
  const samples = options.samples ?? 3200;
  if (!fs.existsSync(inputDir) || !fs.statSync(inputDir).isDirectory()) {
    throw new Error(`input directory not found: ${inputDir}`);
  }
  const trialsDir = path.join(outputDir, "trials");
  fs.mkdirSync(trialsDir, { recursive: true });

  const converted: ManifestEntry[] = [];
  const skipped: SkippedFile[] = [];
  for (const file of findMatFiles(inputDir)) {
    const base = path.basename(file);
    const id = base.replace(/\.mat$/i, "");
    try {
      const label = labelForFileName(base);
      if (label === null) {
        throw new Error("file name names no known task");
      }
      const variables = readMat(fs.readFileSync(file));
      let rows = orientMatrix(pickTrialVariable(variables), channels, samples);
      if (options.channelOrder) {
        rows = reorderRows(rows, options.channelOrder);
      }
      for (const row of rows) {
        for (const v of row) {
          if (!Number.isFinite(v)) {
            throw new Error("non-finite sample value");
          }
        }
      }
      fs.writeFileSync(path.join(trialsDir, `${id}.csv`), rowsToCsv(rows));
      converted.push({ id, file: `trials/${id}.csv`, label });
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      skipped.push({ file, reason });
      log(`skipping ${base}: ${reason}`);
    }
  }

  converted.sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  const manifestPath = path.join(outputDir, "manifest.json");
  fs.writeFileSync(manifestPath, JSON.stringify(converted, null, 2) + "\n");
  return { converted, skipped, manifestPath };
}

export function readChannelOrderFile(file: string): string[] {
  return fs
    .readFileSync(file, "utf-8")
    .split(/\r?\n/)
    .map((line) => line.trim())
    .filter((line) => line.length > 0)
    .map((line) => line.split(",")[0]);
}
