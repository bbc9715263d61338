#!/usr/bin/env node
/** CLI: sam40-convert <input dir> <output dir> [--channel-order file] [--channels n] [--samples n] */

import { convert, readChannelOrderFile } from "./convert.js";

function usage(): never {
  console.error(
    "usage: sam40-convert <input dir> <output dir> [--channel-order file] " +
      "[--channels n] [--samples n]",
  );
  process.exit(1);
}

export function main(argv: string[]): number {
  const positional: string[] = [];
  let channelOrderFile: string | undefined;
  let channels = 32;
  let samples = 3200;

  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--channel-order") {
      channelOrderFile = argv[++i];
      if (!channelOrderFile) usage();
    } else if (arg === "--channels") {
      channels = Number(argv[++i]);
    } else if (arg === "--samples") {
      samples = Number(argv[++i]);
    } else if (arg.startsWith("--")) {
      usage();
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 2 || !Number.isInteger(channels) || !Number.isInteger(samples)) {
    usage();
  }
  const [inputDir, outputDir] = positional;

  try {
    const result = convert(inputDir, outputDir, {
      channels,
      samples,
      channelOrder: channelOrderFile ? readChannelOrderFile(channelOrderFile) : undefined,
    });
    const relaxed = result.converted.filter((e) => e.label === "relaxed").length;
    const stressed = result.converted.length - relaxed;
    console.log(
      `converted ${result.converted.length} trials ` +
        `(${relaxed} relaxed, ${stressed} stressed), skipped ${result.skipped.length}`,
    );
    console.log(`manifest: ${result.manifestPath}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
