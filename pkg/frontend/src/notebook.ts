/**
 * Notebook document model: an ordered list of cells bound to an engine
 * transport. Cells are submitted one at a time (queued while the engine is
 * busy); all transformation happens server-side and the cell stores exactly
 * what the engine replied.
 */

import { renderTex } from "./render.js";

export type CellState = "pending" | "ok" | "error";

export interface Cell {
  id: number;
  input: string;
  outputPlain: string;
  outputTex: string;
  outputHtml: string;
  state: CellState;
}

export interface TransportReply {
  kind: "output" | "error";
  body: string;
  tex: string;
}

export interface Transport {
  submit(id: number, body: string): Promise<TransportReply>;
}

export class NotebookDocument {
  cells: Cell[] = [];
  busy = false;
  private nextId = 1;
  private queue: Promise<unknown> = Promise.resolve();

  constructor(private transport: Transport,
              private onChange: (doc: NotebookDocument) => void = () => {}) {}

  /** Append a pending cell and resolve it when the engine replies. */
  submitCell(input: string): Promise<Cell> {
    const cell: Cell = {
      id: this.nextId++,
      input,
      outputPlain: "",
      outputTex: "",
      outputHtml: "",
      state: "pending",
    };
    this.cells.push(cell);
    this.onChange(this);
    const run = this.queue.then(async () => {
      this.busy = true;
      this.onChange(this);
      try {
        const reply = await this.transport.submit(cell.id, input);
        if (reply.kind === "output") {
          cell.outputPlain = reply.body;
          cell.outputTex = reply.tex;
          cell.outputHtml = renderTex(reply.tex);
          cell.state = "ok";
        } else {
          cell.outputPlain = reply.body;
          cell.state = "error";
        }
      } catch (err) {
        cell.outputPlain = `transport down: ${String(err)}; reconnect and retry`;
        cell.state = "error";
      } finally {
        this.busy = false;
        this.onChange(this);
      }
      return cell;
    });
    this.queue = run;
    return run;
  }

  /**
   * A replayable script of all inputs in execution order; error cells are
   * kept as %% comment lines so a replay reproduces exactly the ok cells.
   */
  exportTranscript(): string {
    const lines: string[] = [];
    for (const cell of this.cells) {
      const input = cell.input.trim();
      if (cell.state === "error") {
        lines.push(`%% error cell: ${input.replace(/\n/g, " ")}`);
      } else {
        lines.push(input.endsWith(";") || input.endsWith(".")
          ? input : input + ";");
      }
    }
    return lines.join("\n") + (lines.length ? "\n" : "");
  }
}
