/**
 * Notebook web server: serves the static UI and bridges cell submissions to
 * the engine over the TCP protocol. The document lives here, so the browser
 * stays a thin view.
 *
 *   GET  /              the notebook page
 *   GET  /api/cells     the document as JSON
 *   POST /api/cell      {"body": "..."} -> the resolved cell
 *   GET  /api/export    replayable transcript (text/plain)
 */

import * as fs from "node:fs";
import * as http from "node:http";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { startEngine } from "./engine.js";
import { NotebookDocument, Transport } from "./notebook.js";
import { TcpTransport } from "./tcpTransport.js";

const MIME: Record<string, string> = {
  ".html": "text/html; charset=utf-8",
  ".js": "text/javascript; charset=utf-8",
  ".css": "text/css; charset=utf-8",
};

export function createServer(doc: NotebookDocument,
                             publicDir: string): http.Server {
  return http.createServer(async (req, res) => {
    const url = new URL(req.url ?? "/", "http://localhost");
    try {
      if (req.method === "GET" && url.pathname === "/api/cells") {
        res.writeHead(200, { "content-type": "application/json" });
        res.end(JSON.stringify({ busy: doc.busy, cells: doc.cells }));
        return;
      }
      if (req.method === "GET" && url.pathname === "/api/export") {
        res.writeHead(200, { "content-type": "text/plain; charset=utf-8" });
        res.end(doc.exportTranscript());
        return;
      }
      if (req.method === "POST" && url.pathname === "/api/cell") {
        const chunks: Buffer[] = [];
        for await (const chunk of req) chunks.push(chunk as Buffer);
        const body = JSON.parse(Buffer.concat(chunks).toString("utf-8"));
        if (typeof body.body !== "string") {
          res.writeHead(400, { "content-type": "application/json" });
          res.end(JSON.stringify({ error: "body must be a string" }));
          return;
        }
        const cell = await doc.submitCell(body.body);
        res.writeHead(200, { "content-type": "application/json" });
        res.end(JSON.stringify(cell));
        return;
      }
      if (req.method === "GET") {
        const rel = url.pathname === "/" ? "index.html" : url.pathname.slice(1);
        const file = path.normalize(path.join(publicDir, rel));
        if (file.startsWith(publicDir) && fs.existsSync(file) &&
            fs.statSync(file).isFile()) {
          res.writeHead(200, {
            "content-type": MIME[path.extname(file)] ?? "application/octet-stream",
          });
          res.end(fs.readFileSync(file));
          return;
        }
      }
      res.writeHead(404);
      res.end("not found");
    } catch (err) {
      res.writeHead(500, { "content-type": "application/json" });
      res.end(JSON.stringify({ error: String(err) }));
    }
  });
}

async function main(): Promise<void> {
  const here = path.dirname(fileURLToPath(import.meta.url));
  const publicDir = path.resolve(here, "..", "public");
  const engine = await startEngine(process.env.TENSORPAD_PYTHON ?? "python3");
  const transport = new TcpTransport("127.0.0.1", engine.port);
  await transport.connect();
  const doc = new NotebookDocument(transport);
  const server = createServer(doc, publicDir);
  const port = Number(process.env.PORT ?? 8765);
  server.listen(port, "127.0.0.1", () => {
    console.log(`notebook on http://127.0.0.1:${port} ` +
                `(engine on 127.0.0.1:${engine.port})`);
  });
  const shutdown = () => {
    server.close();
    transport.close();
    engine.stop();
    process.exit(0);
  };
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
}

const invokedDirectly = process.argv[1] &&
  fileURLToPath(import.meta.url) === path.resolve(process.argv[1]);
if (invokedDirectly) {
  main().catch((err) => {
    console.error(err);
    process.exit(1);
  });
}
