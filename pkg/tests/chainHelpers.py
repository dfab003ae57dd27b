import random


def build_chain(ledger, key, blocks=10, per_block=3, seed=0):
    """blocks 개의 블록에 블록당 per_block 개 트랜잭션을 담은 체인."""
    rng = random.Random(seed)
    chain = ledger.new_chain(key)
    for height in range(1, blocks + 1):
        txs = [ledger.create_transaction(key, f"tx-{height}-{i}".encode(), rng) for i in range(per_block)]
        ledger.seal_block(chain, txs, height * 10)
    return chain
