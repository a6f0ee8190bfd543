from typing import Optional, Sequence, List

import numpy as np

__all__ = ['resolve_backend', 'chunk_rows']


def resolve_backend(dispatch_backend: Optional[str]) -> Optional[str]:
    # the following lines are for compatibility
    if dispatch_backend == 'threads':
        return 'threading'
    elif dispatch_backend == 'processes':
        return 'loky'
    return dispatch_backend


def chunk_rows(n_rows: int, n_chunks: int) -> List[np.ndarray]:
    """Split `range(n_rows)` into at most `n_chunks` contiguous, ordered blocks."""
    n_chunks = max(1, min(int(n_chunks), n_rows))
    return [c for c in np.array_split(np.arange(n_rows), n_chunks) if c.size]
