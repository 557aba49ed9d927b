"""Client and server state machines for each register emulation."""

from __future__ import annotations

from enum import Enum

from ..codec import Codec
from ..core import SystemParams
from .abd import ReplicaReader, ReplicaWriter
from .base import Client, Response, Server, Step, decodable_tags, initial_store, recover_value, returnable_tags
from .coded import CodedReader, CodedWriter, QueryCodedWriter
from .hybrid import HybridReader, HybridWriter
from .reader import Reader


class Algorithm(str, Enum):
    ALG1 = "alg1"    # single writer, coded
    ALG2 = "alg2"    # multi-writer, replicas then coded finalize
    ALG2A = "alg2a"  # multi-writer, fewer than nu concurrent writes, coded only
    ABD = "abd"      # replication baseline on 2f+1 servers

    @property
    def multi_writer_tags(self) -> bool:
        return self in (Algorithm.ALG2, Algorithm.ALG2A)

    @property
    def supports_retry(self) -> bool:
        return self is not Algorithm.ABD


def effective_params(algorithm: Algorithm, params: SystemParams) -> SystemParams:
    """Replication runs on 2f+1 servers; every other algorithm on the reduced N."""
    return params.abd() if algorithm is Algorithm.ABD else params


def build_servers(algorithm: Algorithm, params: SystemParams, codec: Codec, *, multi_writer: bool) -> list[Server]:
    replicas = algorithm is Algorithm.ABD
    init = initial_store(params, codec, multi_writer, replicas=replicas)
    return [Server(i + 1, codec, init[i], coded_overwrites_equal=algorithm is Algorithm.ALG2)
            for i in range(params.n)]


def build_writer(algorithm: Algorithm, cid: int, params: SystemParams, codec: Codec, *,
                 multi_writer: bool, markers: bool = True) -> Client:
    if algorithm is Algorithm.ALG1:
        return CodedWriter(cid, params, codec)
    if algorithm is Algorithm.ALG2A:
        return QueryCodedWriter(cid, params, codec)
    if algorithm is Algorithm.ALG2:
        return HybridWriter(cid, params, codec, markers=markers)
    return ReplicaWriter(cid, params, codec, multi_writer=multi_writer)


def build_reader(algorithm: Algorithm, cid: int, params: SystemParams, codec: Codec, *,
                 multi_writer: bool, retry: bool = False, markers: bool = True) -> Reader:
    if retry and not algorithm.supports_retry:
        raise ValueError("the replication baseline never aborts; retry mode does not apply")
    if algorithm in (Algorithm.ALG1, Algorithm.ALG2A):
        return CodedReader(cid, params, codec, multi_writer=multi_writer, retry=retry)
    if algorithm is Algorithm.ALG2:
        return HybridReader(cid, params, codec, retry=retry, markers=markers)
    return ReplicaReader(cid, params, codec, multi_writer=multi_writer)


__all__ = [
    "Algorithm", "Client", "CodedReader", "CodedWriter", "HybridReader", "HybridWriter",
    "QueryCodedWriter", "Reader", "ReplicaReader", "ReplicaWriter", "Response", "Server", "Step",
    "build_reader", "build_servers", "build_writer", "decodable_tags", "effective_params",
    "initial_store", "recover_value", "returnable_tags",
]
