export const BLOCK_TYPES = {
  TEXT: 'text',
  IMAGE: 'image',
  VIDEO: 'video',
};

export const DEFAULT_PAGE_TITLE = 'Untitled page';
export const MAX_BLOCKS_PER_PAGE = 200;
