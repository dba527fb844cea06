import { isSerializable } from './whitelist';
import { DEFAULT_PAGE_TITLE } from '../constants';

export function deserializePage(json) {
  const raw = JSON.parse(json);
  return {
    title: raw.title || DEFAULT_PAGE_TITLE,
    blocks: (raw.blocks || []).filter((block) => isSerializable(block.type)),
  };
}
