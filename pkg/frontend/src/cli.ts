/** Command line entry: `figures <kind> --in <csv> --ref <float> --out <svg>`.
 *
 * Exit codes: 0 on success, 2 for usage or configuration problems, 1 for
 * unreadable or malformed input files.
 */

import { parseArgs } from "node:util";

import { ConfigError, ParseError, UnsupportedDimensionError } from "./errors";
import { FIGURE_KINDS, FigureKind, FigureSpec, render } from "./figures";

const USAGE = `usage: figures <kind> --in <csv> [--regions <file>] --ref <float> --out <svg>

kinds:
  boxplot            log-evidence box per method (results CSV)
  alpha-sweep        log-evidence box per HPD level and method (sweep CSV)
  variance-curve     log variance proxy against HPD level (variance CSV)
  coverage-scatter   eval-half draws against the ellipsoid union (draws CSV
                     plus a --regions file; two-dimensional models only)

options:
  --in <path>        input CSV written by the estimation CLI
  --regions <path>   ellipsoid-union file (required by coverage-scatter)
  --ref <float>      level for the dashed horizontal reference line
                     (the exact log evidence on evidence plots)
  --out <path>       SVG file to write
`;

/** Fold `--ref -1.5` into `--ref=-1.5`; log evidences are negative and
 * the argument parser would otherwise read the value as an option. */
function joinNegativeRef(argv: string[]): string[] {
  const out: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--ref" && i + 1 < argv.length && /^-(\d|\.\d)/.test(argv[i + 1])) {
      out.push(`--ref=${argv[i + 1]}`);
      i += 1;
    } else {
      out.push(argv[i]);
    }
  }
  return out;
}

export function buildSpec(argv: string[]): FigureSpec {
  let parsed;
  try {
    parsed = parseArgs({
      args: joinNegativeRef(argv),
      allowPositionals: true,
      options: {
        in: { type: "string" },
        regions: { type: "string" },
        ref: { type: "string" },
        out: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    });
  } catch (err) {
    throw new ConfigError(err instanceof Error ? err.message : String(err));
  }
  const { values, positionals } = parsed;
  if (values.help) {
    throw new HelpRequested();
  }
  if (positionals.length !== 1) {
    throw new ConfigError("expected exactly one figure kind");
  }
  const kind = positionals[0];
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new ConfigError(
      `unknown figure kind ${JSON.stringify(kind)}; choose from ${FIGURE_KINDS.join(", ")}`,
    );
  }
  for (const name of ["in", "out"] as const) {
    if (values[name] === undefined) {
      throw new ConfigError(`missing required option --${name}`);
    }
  }
  let ref = Number.NaN;
  if (values.ref !== undefined) {
    ref = Number(values.ref);
    if (!Number.isFinite(ref)) {
      throw new ConfigError(`bad --ref value ${JSON.stringify(values.ref)}`);
    }
  } else if (kind !== "coverage-scatter") {
    throw new ConfigError("missing required option --ref");
  }
  return {
    kind: kind as FigureKind,
    input: values.in!,
    regions: values.regions,
    ref,
    output: values.out!,
  };
}

class HelpRequested extends Error {}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  try {
    spec = buildSpec(argv);
  } catch (err) {
    if (err instanceof HelpRequested) {
      process.stdout.write(USAGE);
      return 0;
    }
    process.stderr.write(`figures: ${err instanceof Error ? err.message : String(err)}\n`);
    process.stderr.write(USAGE);
    return 2;
  }
  try {
    const result = render(spec);
    process.stdout.write(`wrote ${spec.output} (${spec.kind})\n`);
    void result;
    return 0;
  } catch (err) {
    if (err instanceof ConfigError) {
      process.stderr.write(`figures: ${err.message}\n`);
      return 2;
    }
    if (err instanceof ParseError || err instanceof UnsupportedDimensionError) {
      process.stderr.write(`figures: ${err.message}\n`);
      return 1;
    }
    if (err instanceof Error && "code" in err) {
      // fs errors such as ENOENT
      process.stderr.write(`figures: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
