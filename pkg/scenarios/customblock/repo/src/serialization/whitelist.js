import { BLOCK_TYPES } from '../constants';

// Block types allowed to survive a save. Anything else is dropped.
export const SERIALIZABLE_TYPES = [
  BLOCK_TYPES.TEXT,
  BLOCK_TYPES.IMAGE,
  BLOCK_TYPES.VIDEO,
];

export function isSerializable(type) {
  return SERIALIZABLE_TYPES.includes(type);
}
