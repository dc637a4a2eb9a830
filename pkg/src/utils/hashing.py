import hashlib
import json
from pathlib import Path


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(',', ':'), default=str)


def config_hash(payload) -> str:
    return hashlib.sha256(canonical_json(payload).encode('utf-8')).hexdigest()


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(Path(path), 'rb') as file:
        for chunk in iter(lambda: file.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()
