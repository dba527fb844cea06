export type BlockType = 'text' | 'image' | 'video';

export interface Block<O = Record<string, unknown>> {
  id: string;
  type: BlockType;
  options: O;
}

export interface TextOptions {
  text: string;
  align?: 'left' | 'center' | 'right';
}

export interface ImageOptions {
  src: string;
  alt?: string;
  width?: number;
}

export interface VideoOptions {
  url: string;
  autoplay?: boolean;
}
