/** Spawns the Python engine's protocol server and reports its port. */

import { ChildProcess, spawn } from "node:child_process";

export interface EngineHandle {
  port: number;
  process: ChildProcess;
  stop(): void;
}

export function startEngine(python = "python3",
                            timeoutMs = 20000): Promise<EngineHandle> {
  return new Promise((resolve, reject) => {
    const child = spawn(python, ["-m", "tensorpad.cli", "serve", "--port", "0"],
                        { stdio: ["ignore", "pipe", "pipe"] });
    let settled = false;
    let out = "";
    const timer = setTimeout(() => {
      if (!settled) {
        settled = true;
        child.kill();
        reject(new Error(`engine did not announce a port:\n${out}`));
      }
    }, timeoutMs);
    child.stdout!.setEncoding("utf-8");
    child.stdout!.on("data", (chunk: string) => {
      out += chunk;
      const m = /listening on 127\.0\.0\.1:(\d+)/.exec(out);
      if (m && !settled) {
        settled = true;
        clearTimeout(timer);
        resolve({
          port: Number(m[1]),
          process: child,
          stop: () => child.kill(),
        });
      }
    });
    child.stderr!.setEncoding("utf-8");
    child.stderr!.on("data", (chunk: string) => { out += chunk; });
    child.once("exit", (code) => {
      if (!settled) {
        settled = true;
        clearTimeout(timer);
        reject(new Error(`engine exited with ${code}:\n${out}`));
      }
    });
  });
}
