export const ADD_BLOCK = 'ADD_BLOCK';
export const UPDATE_BLOCK = 'UPDATE_BLOCK';
export const REMOVE_BLOCK = 'REMOVE_BLOCK';

export function addBlock(block) {
  return { type: ADD_BLOCK, block };
}

export function updateBlock(id, options) {
  return { type: UPDATE_BLOCK, id, options };
}

export function removeBlock(id) {
  return { type: REMOVE_BLOCK, id };
}
