export { registerBlock, getBlockComponent, registeredTypes } from './registry';
export { TextBlock } from './TextBlock';
export { ImageBlock } from './ImageBlock';
export { VideoBlock } from './VideoBlock';
