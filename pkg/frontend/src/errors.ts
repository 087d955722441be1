/**
 * Error types for the on-disk containers and the CLI boundary.
 */

/** Base class for container decoding and encoding failures. */
export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

export class BadMagic extends FormatError {}

export class TruncatedFile extends FormatError {}

export class DtypeUnknown extends FormatError {}

export class JsonMalformed extends FormatError {}

export class OverlappingOffsets extends FormatError {}

/** A CLI invocation exited non-zero; carries the exit code and stderr. */
export class CliError extends Error {
  readonly exitCode: number;
  readonly stderr: string;

  constructor(message: string, exitCode: number, stderr: string) {
    super(message);
    this.name = "CliError";
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}
