#!/usr/bin/env node
/**
 * scorer-service entry point.
 *
 *   node dist/cli.js --echo --stdio          # echo backend over stdio
 *   node dist/cli.js --port 9100             # lexical backend over TCP
 *   node dist/cli.js --backend echo --port 0 # ephemeral port, printed on stdout
 *
 * With --port, the line "listening on <host>:<port>" goes to stderr (stdout
 * stays protocol-clean for --stdio). Startup failures exit non-zero.
 */

import { makeBackend } from "./backends.js";
import { serveStreams, serveTcp } from "./server.js";

interface CliOptions {
  backend: string;
  stdio: boolean;
  port: number | null;
  host: string;
}

function parseArgs(argv: string[]): CliOptions {
  const options: CliOptions = { backend: "lexical", stdio: false, port: null, host: "127.0.0.1" };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    switch (arg) {
      case "--echo":
        options.backend = "echo";
        break;
      case "--backend":
        options.backend = argv[++i] ?? "";
        break;
      case "--stdio":
        options.stdio = true;
        break;
      case "--port":
        options.port = Number(argv[++i]);
        break;
      case "--host":
        options.host = argv[++i] ?? "127.0.0.1";
        break;
      case "--help":
      case "-h":
        console.log("usage: cli.js [--echo | --backend NAME] (--stdio | --port N [--host H])");
        process.exit(0);
        break;
      default:
        throw new Error(`unknown argument ${arg}`);
    }
  }
  if (options.port !== null && (Number.isNaN(options.port) || options.port < 0 || options.port > 65535)) {
    throw new Error(`invalid port ${options.port}`);
  }
  if (!options.stdio && options.port === null) {
    options.stdio = true;
  }
  return options;
}

async function main(): Promise<void> {
  const options = parseArgs(process.argv.slice(2));
  const backend = makeBackend(options.backend);
  if (options.port !== null) {
    const handle = await serveTcp(options.host, options.port, backend);
    process.stderr.write(`listening on ${options.host}:${handle.port}\n`);
    await new Promise(() => {
      /* run until killed */
    });
  } else {
    await serveStreams(process.stdin, process.stdout, backend);
  }
}

main().catch((err) => {
  process.stderr.write(`scorer-service: ${err instanceof Error ? err.message : String(err)}\n`);
  process.exit(1);
});
