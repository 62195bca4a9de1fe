/** Low-level bridge to the core CLI.
 *
 * Every call is one subprocess over temp files: write the input lines,
 * run `python -m layoutir.cli <subcommand> --in ... --out ...`, read the
 * output lines back. No state survives between calls, so the bindings are
 * reentrant and thread-safe by construction.
 */
import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { LayoutIrError } from "./errors.js";

const PYTHON = process.env.LAYOUTIR_PYTHON ?? "python3";

const DIAGNOSTIC = /^record (.+?): ([A-Za-z_]\w*): (.*)$/m;

export interface CliRun {
  /** Raw output file text, trailing newline included. */
  text: string;
  /** Output split into nonempty lines. */
  lines: string[];
}

/** Run one subcommand; `extraInputs` maps flag name to JSONL lines. */
export function runCli(
  subcommand: string,
  inputLines: string[],
  flags: string[] = [],
  extraInputs: Record<string, string[]> = {},
): CliRun {
  const dir = mkdtempSync(join(tmpdir(), "layoutir-"));
  try {
    const inPath = join(dir, "in.jsonl");
    const outPath = join(dir, "out.jsonl");
    writeFileSync(inPath, inputLines.map((l) => l + "\n").join(""), "utf-8");
    const argv = ["-m", "layoutir.cli", subcommand, "--in", inPath, "--out", outPath, ...flags];
    for (const [flag, lines] of Object.entries(extraInputs)) {
      const p = join(dir, `${flag}.jsonl`);
      writeFileSync(p, lines.map((l) => l + "\n").join(""), "utf-8");
      argv.push(`--${flag}`, p);
    }
    const proc = spawnSync(PYTHON, argv, { encoding: "utf-8" });
    if (proc.error) {
      throw new LayoutIrError("SpawnError", String(proc.error.message ?? proc.error));
    }
    if (proc.status !== 0) {
      throw toError(proc.status, proc.stderr ?? "");
    }
    const text = readFileSync(outPath, "utf-8");
    return { text, lines: text.split("\n").filter((l) => l.length > 0) };
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function toError(status: number | null, stderr: string): LayoutIrError {
  const m = DIAGNOSTIC.exec(stderr);
  if (m) {
    return new LayoutIrError(m[2], m[3], m[1]);
  }
  const code = status === 2 ? "UsageError" : "CliError";
  return new LayoutIrError(code, stderr.trim() || `exit status ${status}`);
}

/** Version string reported by the core CLI. */
export function coreVersion(): string {
  const proc = spawnSync(PYTHON, ["-m", "layoutir.cli", "--version"], { encoding: "utf-8" });
  if (proc.status !== 0) {
    throw new LayoutIrError("CliError", proc.stderr?.trim() || "cannot query version");
  }
  return proc.stdout.trim();
}
