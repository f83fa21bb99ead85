/**
 * Transports: serve the line protocol over standard streams or a TCP socket.
 * Lines are answered strictly in order per connection; a malformed line gets
 * an error response and the connection stays open.
 */

import * as net from "node:net";
import * as readline from "node:readline";
import type { Readable, Writable } from "node:stream";

import type { Backend } from "./backends.js";
import { handleLine } from "./protocol.js";

export function serveStreams(input: Readable, output: Writable, backend: Backend): Promise<void> {
  return new Promise((resolve) => {
    const rl = readline.createInterface({ input, crlfDelay: Infinity });
    rl.on("line", (line) => {
      if (line.trim().length === 0) return;
      output.write(handleLine(line, backend) + "\n");
    });
    rl.on("close", resolve);
  });
}

export interface TcpHandle {
  port: number;
  close(): Promise<void>;
}

export function serveTcp(host: string, port: number, backend: Backend): Promise<TcpHandle> {
  const server = net.createServer((socket) => {
    const rl = readline.createInterface({ input: socket, crlfDelay: Infinity });
    rl.on("line", (line) => {
      if (line.trim().length === 0) return;
      socket.write(handleLine(line, backend) + "\n");
    });
    socket.on("error", () => {
      // a client hanging up mid-line is its own problem, not ours
      rl.close();
    });
  });
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      const address = server.address() as net.AddressInfo;
      resolve({
        port: address.port,
        close: () =>
          new Promise<void>((done) => {
            server.close(() => done());
          }),
      });
    });
  });
}
