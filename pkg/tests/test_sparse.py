import numpy as np
import pytest
import scipy.sparse as sps

from shiftkrylov.errors import MatrixMarketError
from shiftkrylov.generators import make_rng
from shiftkrylov.sparse import CsrMatrix, as_dense, csr_matvec, read_matrix_market, write_matrix_market


def test_matvec_matches_dense():
    rng = make_rng(0)
    D = rng.standard_normal((8, 8)) * (rng.random((8, 8)) < 0.3)
    A = CsrMatrix.from_dense(D)
    x = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert np.allclose(csr_matvec(A, x), D @ x)
    assert np.allclose(A @ x, D @ x)
    assert np.allclose(as_dense(A), D)
    assert np.isclose(A.norm_fro(), np.linalg.norm(D))


def test_roundtrip_is_exact(tmp_path):
    rng = make_rng(1)
    M = sps.random(30, 30, density=0.1, random_state=np.random.RandomState(1), format="csr") * 1e3
    M = M + sps.eye(30) * np.pi
    A = CsrMatrix.from_scipy(M)
    p = tmp_path / "a.mtx"
    write_matrix_market(A, p)
    B = read_matrix_market(p)
    assert np.array_equal(B.toarray(), A.toarray())


def test_symmetric_expands(tmp_path):
    p = tmp_path / "s.mtx"
    p.write_text(
        "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 2.0\n2 1 -1.0\n3 2 -1.0\n3 3 2.0\n"
    )
    A = read_matrix_market(p).toarray()
    assert np.array_equal(A, A.T)
    assert A[0, 1] == -1.0 and A[1, 1] == 0.0


def test_integer_field(tmp_path):
    p = tmp_path / "i.mtx"
    p.write_text("%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 3\n2 2 -4\n")
    assert np.array_equal(read_matrix_market(p).diagonal(), [3.0, -4.0])


@pytest.mark.parametrize(
    "text",
    [
        "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
        "%%MatrixMarket matrix array real general\n1 1\n1.0\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
        "not a header\n",
    ],
)
def test_rejects_bad_files(tmp_path, text):
    p = tmp_path / "bad.mtx"
    p.write_text(text)
    with pytest.raises(MatrixMarketError):
        read_matrix_market(p)


def test_permutation_matvec():
    A = CsrMatrix.from_dense(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(csr_matvec(A, np.array([1.0, 2.0j])), [2.0j, 1.0])
    x = np.array([1.0, -3.0])
    assert np.allclose(CsrMatrix.from_scipy(sps.eye(2)) @ x, x)


def test_random_matvec_relative():
    M = sps.random(100, 100, density=0.05, random_state=np.random.RandomState(3), format="csr")
    A = CsrMatrix.from_scipy(M)
    x = make_rng(4).standard_normal(100)
    ref = M.toarray() @ x
    assert np.linalg.norm(csr_matvec(A, x) - ref) <= 1e-14 * np.linalg.norm(ref)


def test_single_entry_file(tmp_path):
    p = tmp_path / "one.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 2.5\n")
    A = read_matrix_market(p)
    assert A.nnz == 1 and A.toarray()[0, 0] == 2.5


def test_roundtrip_csr_arrays(tmp_path):
    M = sps.random(40, 40, density=0.08, random_state=np.random.RandomState(9), format="csr")
    M.sort_indices()
    A = CsrMatrix.from_scipy(M)
    write_matrix_market(A, tmp_path / "r.mtx")
    B = read_matrix_market(tmp_path / "r.mtx")
    assert np.array_equal(A.row_ptr, B.row_ptr)
    assert np.array_equal(A.col_idx, B.col_idx)
    assert np.array_equal(A.values, B.values)
