import { BLOCK_TYPES } from '../constants';
import { TextBlock } from './TextBlock';
import { ImageBlock } from './ImageBlock';
import { VideoBlock } from './VideoBlock';

const registry = new Map();

export function registerBlock(type, component) {
  if (registry.has(type)) {
    throw new Error(`block type ${type} is already registered`);
  }
  registry.set(type, component);
}

export function getBlockComponent(type) {
  const component = registry.get(type);
  if (!component) {
    throw new Error(`unknown block type ${type}`);
  }
  return component;
}

export function registeredTypes() {
  return Array.from(registry.keys());
}

registerBlock(BLOCK_TYPES.TEXT, TextBlock);
registerBlock(BLOCK_TYPES.IMAGE, ImageBlock);
registerBlock(BLOCK_TYPES.VIDEO, VideoBlock);
