import { Block } from './blocks';

export interface EditorState {
  pageId: string;
  title: string;
  blocks: Block[];
  selectedBlockId: string | null;
  dirty: boolean;
}

export type OptionsChangeHandler<O> = (options: O) => void;
