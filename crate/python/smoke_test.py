"""Smoke test for the hdfactor extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import json
import math

import hdfactor


def main():
    a = hdfactor.PhasorVector.random(256, seed=3)
    b = hdfactor.PhasorVector.random(256, seed=4)
    back = a.bind(b).unbind(b)
    assert abs(back.similarity(a) - 1.0) < 1e-12
    assert abs(a.similarity(b)) < 0.3

    enc = hdfactor.FpeEncoder.random(512, 1e5, seed=1)
    assert enc.encode(0.0).similarity(hdfactor.PhasorVector.ones(512)) > 1 - 1e-12
    prod = enc.encode_log(15)
    assert prod.similarity(enc.encode_log(3).bind(enc.encode_log(5))) > 1 - 1e-9

    primes = hdfactor.primes_up_to(30)
    assert primes == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert hdfactor.candidate_set(35) == [2, 3, 5, 7, 11, 13, 17]
    assert len(hdfactor.prime_window(2, 512)) == 512
    beta = hdfactor.select_beta(hdfactor.candidate_set(603329))
    assert 1.5e9 / 1.1 <= beta <= 1.5e9 * 1.1

    book = hdfactor.Codebook(hdfactor.prime_window(2, 512), 2048, seed=1)
    res = hdfactor.solve(603329, book)
    print(res)
    assert res.correct and res.predicted_factors == [757, 797]
    assert json.loads(res.to_json())["data"]["s"] == 603329

    small = hdfactor.Codebook(hdfactor.prime_window(2, 32), 256, seed=2)
    results = hdfactor.solve_batch([[2, 3], [5, 7], [11, 13]], small)
    assert all(r.correct for r in results)

    idx, sim = small.cleanup(small.row(5))
    assert idx == 5 and sim > 0.99

    kernel = json.loads(hdfactor.kernel_sweep([math.log(2), math.log(3)], [3.0], runs=2, grid_points=50))
    assert kernel["kind"] == "kernel" and len(kernel["data"][0]["grid"]) == 50

    sweep = json.loads(hdfactor.accuracy_sweep("cardinalities = [16]\ndims = [128]\ntrials_per_cell = 20\n"))
    assert sweep["data"]["cells"][0]["accuracy"] >= 0.9

    try:
        hdfactor.solve(3, small)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print("smoke test passed, hdfactor", hdfactor.__version__)


if __name__ == "__main__":
    main()
