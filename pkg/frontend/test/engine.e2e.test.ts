/**
 * End-to-end against the real engine: the fourth-order Weyl decomposition
 * entered cell by cell shows the rendered coefficient list, and the exported
 * transcript replays through the batch runner with identical plain outputs.
 */

import { execFile } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { EngineHandle, startEngine } from "../src/engine.js";
import { NotebookDocument } from "../src/notebook.js";
import { TcpTransport } from "../src/tcpTransport.js";

const run = promisify(execFile);

const WEYL_CELLS = [
  "{m,n,p,q,r,s,t,u,v,w,a,b,c,d,e,f}::Indices(vector).",
  "W_{m n p q}::WeylTensor.",
  "W1:= W_{m n a b} W_{n p b c} W_{p s c d} W_{s m d a}.",
  "W2:= W_{m n a b} W_{n p b c} W_{m s c d} W_{s p d a}.",
  "W3:= W_{m n a b} W_{p s b a} W_{m n c d} W_{p s d c}.",
  "W4:= W_{m n a b} W_{m n b a} W_{p s c d} W_{p s d c}.",
  "W5:= W_{m n a b} W_{n p b a} W_{p s c d} W_{s m d c}.",
  "W6:= W_{m n a b} W_{p s b a} W_{m p c d} W_{n s d c}.",
  "W7:= W_{m n}^{m n} W_{p q}^{p q} W_{r s}^{r s} W_{t u}^{t u}.",
  "@asym!(W7){^{m}, ^{n}, ^{p}, ^{q}, ^{r}, ^{s}, ^{t}, ^{u}}.",
  "@substitute!(%)( W_{m n}^{p q} -> W_{m n p q} ).",
  "@indexsort!(%).",
  "@collect_terms!(%).",
  "@canonicalise!(%).",
  "@collect_terms!(%).",
  "basisW4:= { @(W1), @(W2), @(W3), @(W4), @(W5), @(W6), @(W7) }.",
  "W_{p q r s} W_{p t r u} W_{t v q w} W_{u v s w}" +
  " - W_{p q r s} W_{p q t u} W_{r v t w} W_{s v u w}.",
  "@decompose!(%)(@(basisW4));",
];

describe("notebook against the live engine", () => {
  let engine: EngineHandle;
  let transport: TcpTransport;

  beforeAll(async () => {
    engine = await startEngine();
    transport = new TcpTransport("127.0.0.1", engine.port);
    await transport.connect();
  }, 30000);

  afterAll(() => {
    transport?.close();
    engine?.stop();
  });

  it("runs a small session with declarations, assignments and errors",
     async () => {
    const doc = new NotebookDocument(transport);
    const decl = await doc.submitCell("{m,n,p,q#}::Indices(vector).");
    expect(decl.state).toBe("ok");
    expect(decl.outputPlain).toBe("");
    const assign = await doc.submitCell("C:= A A;");
    expect(assign.state).toBe("ok");
    expect(assign.outputPlain).toBe("C:= A A;");
    const sub = await doc.submitCell(
      "@substitute!(%)( A = B_{m n} B_{m n} );");
    expect(sub.outputPlain).toBe("C:= B_{m n} B_{m n} B_{p q1} B_{p q1};");
    expect(sub.outputHtml).toContain("<sub><i>p</i> <i>q1</i></sub>");
    const bad = await doc.submitCell("D:= F_{m n;");
    expect(bad.state).toBe("error");
    const after = await doc.submitCell("E:= C;");
    expect(after.state).toBe("ok");
  }, 60000);

  it("computes the Weyl decomposition cell by cell and replays the export",
     async () => {
    const doc = new NotebookDocument(transport);
    for (const line of WEYL_CELLS) {
      const cell = await doc.submitCell(line);
      expect(cell.state, `cell failed: ${line}\n${cell.outputPlain}`)
        .toBe("ok");
    }
    const last = doc.cells[doc.cells.length - 1];
    expect(last.outputPlain).toBe("{0, 1, 0, 0, 0, -1/4, 0};");
    expect(last.outputHtml).toBe("{0, 1, 0, 0, 0, -1/4, 0}");

    const transcript = doc.exportTranscript();
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "tensorpad-"));
    const script = path.join(dir, "replay.tp");
    fs.writeFileSync(script, transcript);
    const { stdout } = await run(
      "python3", ["-m", "tensorpad.cli", "run", script],
      { timeout: 500000 });
    const replayed = stdout.split("\n").filter((l) => l.trim() !== "");
    const fromCells = doc.cells.map((c) => c.outputPlain)
      .filter((out) => out !== "");
    expect(replayed).toEqual(fromCells);
  }, 500000);
});
