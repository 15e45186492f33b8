import { parseArgs } from "node:util";
import { FIGURE_KINDS, FigureKind, render } from "./render.js";

const USAGE = `usage: taskmesh-plots --input bench.csv --kind strong --output strong.svg

options:
  -i, --input   benchmark CSV produced by 'taskmesh bench'
  -k, --kind    figure kind: ${FIGURE_KINDS.join(" | ")}
  -o, --output  output SVG path
  -h, --help    show this message
`;

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        input: { type: "string", short: "i" },
        kind: { type: "string", short: "k" },
        output: { type: "string", short: "o" },
        help: { type: "boolean", short: "h" },
      },
    });
  } catch (error) {
    process.stderr.write(`${(error as Error).message}\n${USAGE}`);
    return 2;
  }
  const { input, kind, output, help } = parsed.values;
  if (help) {
    process.stdout.write(USAGE);
    return 0;
  }
  for (const [flag, value] of [["--input", input], ["--kind", kind], ["--output", output]]) {
    if (!value) {
      process.stderr.write(`missing required flag ${flag}\n${USAGE}`);
      return 2;
    }
  }
  if (!FIGURE_KINDS.includes(kind as FigureKind)) {
    process.stderr.write(`unknown figure kind '${kind}'\n${USAGE}`);
    return 2;
  }
  try {
    render({ input: input!, kind: kind as FigureKind, output: output! });
  } catch (error) {
    process.stderr.write(`${(error as Error).message}\n`);
    return 1;
  }
  process.stdout.write(`wrote ${output}\n`);
  return 0;
}

process.exit(main(process.argv.slice(2)));
