/** Error types shared by the parsers, the renderers, and the CLI. */

/** An input file is malformed; `line` is the 1-based offending line. */
export class ParseError extends Error {
  readonly line: number;

  constructor(message: string, line: number) {
    super(`line ${line}: ${message}`);
    this.name = "ParseError";
    this.line = line;
  }
}

/** The coverage scatter only handles two-dimensional draws. */
export class UnsupportedDimensionError extends Error {
  readonly d: number;

  constructor(d: number) {
    super(`coverage scatter needs d = 2, got d = ${d}`);
    this.name = "UnsupportedDimensionError";
    this.d = d;
  }
}

/** Bad command-line usage or an unusable figure request. */
export class ConfigError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConfigError";
  }
}
