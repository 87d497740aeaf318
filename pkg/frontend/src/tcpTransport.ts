/**
 * Newline-delimited JSON client for the engine's TCP protocol. One request
 * in flight at a time; each input frame is answered by busy/terminal/idle
 * messages and the terminal one resolves the promise.
 */

import * as net from "node:net";
import { Transport, TransportReply } from "./notebook.js";

interface Frame {
  id: number;
  kind: string;
  body: string;
  tex?: string;
}

export class TcpTransport implements Transport {
  private socket: net.Socket | null = null;
  private buffer = "";
  private waiting: {
    id: number;
    resolve: (r: TransportReply) => void;
    reject: (e: Error) => void;
  } | null = null;
  onStatus: (status: string) => void = () => {};

  constructor(private host: string, private port: number) {}

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection(this.port, this.host);
      socket.setEncoding("utf-8");
      socket.once("connect", () => {
        this.socket = socket;
        resolve();
      });
      socket.once("error", (err) => {
        if (!this.socket) reject(err);
        else if (this.waiting) {
          this.waiting.reject(err);
          this.waiting = null;
        }
      });
      socket.on("data", (chunk: string) => this.feed(chunk));
      socket.on("close", () => {
        if (this.waiting) {
          this.waiting.reject(new Error("connection closed"));
          this.waiting = null;
        }
        this.socket = null;
      });
    });
  }

  close(): void {
    this.socket?.end();
    this.socket = null;
  }

  private feed(chunk: string): void {
    this.buffer += chunk;
    let nl = this.buffer.indexOf("\n");
    while (nl >= 0) {
      const line = this.buffer.slice(0, nl).trim();
      this.buffer = this.buffer.slice(nl + 1);
      if (line) this.handle(JSON.parse(line) as Frame);
      nl = this.buffer.indexOf("\n");
    }
  }

  private handle(frame: Frame): void {
    if (frame.kind === "status") {
      this.onStatus(frame.body);
      return;
    }
    if (this.waiting && frame.id === this.waiting.id &&
        (frame.kind === "output" || frame.kind === "error")) {
      const w = this.waiting;
      this.waiting = null;
      w.resolve({
        kind: frame.kind,
        body: frame.body,
        tex: frame.tex ?? "",
      });
    }
  }

  submit(id: number, body: string): Promise<TransportReply> {
    if (!this.socket) return Promise.reject(new Error("not connected"));
    if (this.waiting) return Promise.reject(new Error("request in flight"));
    return new Promise((resolve, reject) => {
      this.waiting = { id, resolve, reject };
      this.socket!.write(JSON.stringify({ id, kind: "input", body }) + "\n");
    });
  }
}
