/**
 * The shared embedding container: magic "MMEB", u32 version (1), u32 record
 * count, u32 dimension, then per record a u16 id length, UTF-8 id bytes,
 * and dimension little-endian float32 values.
 */

import { readFileSync, renameSync, writeFileSync } from "node:fs";

export const MAGIC = "MMEB";
export const VERSION = 1;

export interface EmbeddingRecord {
  id: string;
  values: Float32Array;
}

export function writeEmbeddingFile(path: string, records: EmbeddingRecord[]): void {
  const dim = records.length ? records[0].values.length : 0;
  const seen = new Set<string>();
  const chunks: Buffer[] = [];
  const header = Buffer.alloc(16);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(records.length, 8);
  header.writeUInt32LE(dim, 12);
  chunks.push(header);
  for (const record of records) {
    if (record.values.length !== dim) {
      throw new Error(`record ${record.id} has dimension ${record.values.length}, expected ${dim}`);
    }
    if (seen.has(record.id)) throw new Error(`duplicate record id ${record.id}`);
    seen.add(record.id);
    const idBytes = Buffer.from(record.id, "utf-8");
    if (idBytes.length > 0xffff) throw new Error(`record id too long: ${record.id}`);
    const lenBuf = Buffer.alloc(2);
    lenBuf.writeUInt16LE(idBytes.length, 0);
    const values = Buffer.alloc(4 * dim);
    for (let i = 0; i < dim; i++) values.writeFloatLE(record.values[i], 4 * i);
    chunks.push(lenBuf, idBytes, values);
  }
  const tmp = path + ".tmp";
  writeFileSync(tmp, Buffer.concat(chunks));
  renameSync(tmp, path); // atomic publish
}

export function readEmbeddingFile(path: string, expectedDim?: number): Map<string, Float32Array> {
  const blob = readFileSync(path);
  if (blob.length < 16) throw new Error(`${path}: shorter than the fixed header`);
  if (blob.toString("ascii", 0, 4) !== MAGIC) throw new Error(`${path}: bad magic`);
  const version = blob.readUInt32LE(4);
  if (version !== VERSION) throw new Error(`${path}: unsupported version ${version}`);
  const count = blob.readUInt32LE(8);
  const dim = blob.readUInt32LE(12);
  if (expectedDim !== undefined && count > 0 && dim !== expectedDim) {
    throw new Error(`${path}: dimension ${dim}, expected ${expectedDim}`);
  }
  const records = new Map<string, Float32Array>();
  let offset = 16;
  for (let r = 0; r < count; r++) {
    if (offset + 2 > blob.length) throw new Error(`${path}: truncated at byte ${offset}`);
    const idLen = blob.readUInt16LE(offset);
    offset += 2;
    if (offset + idLen + 4 * dim > blob.length) throw new Error(`${path}: truncated at byte ${offset}`);
    const id = blob.toString("utf-8", offset, offset + idLen);
    offset += idLen;
    const values = new Float32Array(dim);
    for (let i = 0; i < dim; i++) values[i] = blob.readFloatLE(offset + 4 * i);
    offset += 4 * dim;
    if (records.has(id)) throw new Error(`${path}: duplicate record id ${id}`);
    records.set(id, values);
  }
  if (offset !== blob.length) throw new Error(`${path}: trailing bytes at ${offset}`);
  return records;
}
