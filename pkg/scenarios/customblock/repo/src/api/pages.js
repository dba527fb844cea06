import { request } from './client';
import { serializePage } from '../serialization/serialize';
import { deserializePage } from '../serialization/deserialize';

export async function loadPage(pageId) {
  const data = await request(`/pages/${pageId}`);
  return deserializePage(data.body);
}

export async function savePage(pageId, page) {
  return request(`/pages/${pageId}`, {
    method: 'PUT',
    body: JSON.stringify({ body: serializePage(page) }),
  });
}
