/** Structured error surfaced from the core pipeline.
 *
 * `code` is the core error class name (IrSyntaxError, UnknownTypeError,
 * InfeasibleError, ...), so callers can branch on the same taxonomy the
 * core library uses. `record` names the failing input record when the
 * failure came from a specific line.
 */
export class LayoutIrError extends Error {
  readonly code: string;
  readonly record: string | null;

  constructor(code: string, message: string, record: string | null = null) {
    super(message);
    this.name = "LayoutIrError";
    this.code = code;
    this.record = record;
  }
}
