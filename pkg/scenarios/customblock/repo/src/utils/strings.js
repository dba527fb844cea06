export function truncate(text, max) {
  if (text.length <= max) {
    return text;
  }
  return `${text.slice(0, max - 1)}…`;
}

export function titleCase(text) {
  return text.replace(/\b\w/g, (c) => c.toUpperCase());
}
