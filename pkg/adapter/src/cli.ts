/** CLI: pretrain | finetune | predict.
 *
 *   node dist/cli.js pretrain --input train.jsonl --out checkpoint/ [--epochs 8] [--dim 64] [--seed 0]
 *   node dist/cli.js finetune --train train.jsonl --valid valid.jsonl --checkpoint checkpoint/ --out model/ [--seed 0]
 *   node dist/cli.js predict  --model model/ --input test.jsonl --out preds.jsonl
 */

import { DEFAULT_FINETUNE, fineTune } from './finetune';
import { pretrain } from './pretrain';
import { predictFile } from './predict';

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`bad arguments near '${key}'`);
    }
    flags.set(key.slice(2), argv[i + 1]);
  }
  return flags;
}

function need(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new Error(`missing required flag --${name}`);
  return value;
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  try {
    const flags = parseFlags(rest);
    if (command === 'pretrain') {
      const result = await pretrain(need(flags, 'input'), need(flags, 'out'), {
        epochs: flags.has('epochs') ? Number(flags.get('epochs')) : undefined,
        dim: flags.has('dim') ? Number(flags.get('dim')) : undefined,
        numLayers: flags.has('layers') ? Number(flags.get('layers')) : undefined,
        seed: flags.has('seed') ? Number(flags.get('seed')) : undefined,
      });
      console.log(JSON.stringify({
        command, out: result.dir, vocabSize: result.vocabSize,
        epochLosses: result.epochLosses.map((l) => Number(l.toFixed(4))),
      }));
      return 0;
    }
    if (command === 'finetune') {
      const config = {
        ...DEFAULT_FINETUNE,
        checkpoint: need(flags, 'checkpoint'),
        seed: flags.has('seed') ? Number(flags.get('seed')) : DEFAULT_FINETUNE.seed,
        epochs: flags.has('epochs') ? Number(flags.get('epochs')) : DEFAULT_FINETUNE.epochs,
      };
      console.log(JSON.stringify({ command, config }));
      const result = await fineTune(need(flags, 'train'), need(flags, 'valid'), config, need(flags, 'out'));
      console.log(JSON.stringify({
        modelDir: result.modelDir,
        logPath: result.logPath,
        trainLoss: result.log.map((e) => Number(e.trainLoss.toFixed(4))),
      }));
      return 0;
    }
    if (command === 'predict') {
      const records = await predictFile(need(flags, 'model'), need(flags, 'input'), need(flags, 'out'));
      console.log(JSON.stringify({ command, predictions: records.length }));
      return 0;
    }
    console.error(`unknown command '${command ?? ''}'; expected pretrain | finetune | predict`);
    return 1;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
