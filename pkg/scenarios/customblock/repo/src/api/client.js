const BASE_URL = '/api/v1';

export async function request(path, options = {}) {
  const response = await fetch(`${BASE_URL}${path}`, {
    headers: { 'Content-Type': 'application/json' },
    ...options,
  });
  if (!response.ok) {
    throw new Error(`request to ${path} failed with ${response.status}`);
  }
  return response.json();
}
