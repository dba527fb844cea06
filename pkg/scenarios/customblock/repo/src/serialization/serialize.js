import { isSerializable } from './whitelist';

export function serializePage(page) {
  return JSON.stringify({
    title: page.title,
    blocks: page.blocks
      .filter((block) => isSerializable(block.type))
      .map((block) => ({ id: block.id, type: block.type, options: block.options })),
  });
}
