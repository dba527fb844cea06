import { ADD_BLOCK, UPDATE_BLOCK, REMOVE_BLOCK } from './actions';
import { MAX_BLOCKS_PER_PAGE } from '../constants';

export function pageReducer(state, action) {
  switch (action.type) {
    case ADD_BLOCK:
      if (state.blocks.length >= MAX_BLOCKS_PER_PAGE) {
        return state;
      }
      return { ...state, blocks: [...state.blocks, action.block], dirty: true };
    case UPDATE_BLOCK:
      return {
        ...state,
        blocks: state.blocks.map((b) => (b.id === action.id ? { ...b, options: action.options } : b)),
        dirty: true,
      };
    case REMOVE_BLOCK:
      return { ...state, blocks: state.blocks.filter((b) => b.id !== action.id), dirty: true };
    default:
      return state;
  }
}
