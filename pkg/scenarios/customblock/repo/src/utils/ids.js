let counter = 0;

export function nextBlockId(prefix = 'blk') {
  counter += 1;
  return `${prefix}-${Date.now().toString(36)}-${counter}`;
}
