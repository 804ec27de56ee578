"""Walk through the six-programmer example: index, pruning decisions, answer and certificate."""
import json

from sstruss.baselines import oracle_query
from sstruss.engine import answer_query
from sstruss.fixtures import six_user_network, six_user_query
from sstruss.index import build_index
from sstruss.pruning import BoundsContext, user_prune
from sstruss.verify import SMALL_INDEX


def main():
    net = six_user_network()
    query = six_user_query()
    idx = build_index(net, SMALL_INDEX)
    names = [u.name for u in net.social.users]
    print(f"index: {idx.n_nodes} nodes, height {idx.height()}")

    ctx = BoundsContext(net, idx, query)
    print(f"query user {names[query.q]}, k={query.k} d={query.d} sigma={query.sigma} theta={query.theta}")
    for u in range(net.n_users):
        dec = user_prune(ctx, u)
        print(f"  {names[u]}: {'kept' if dec is None else 'pruned by ' + dec.rule}")

    comm, stats = answer_query(net, idx, query)
    print("community:", [names[u] for u in comm.members], "valid" if comm.valid else "invalid")
    print("certificate:", json.dumps(comm.certificate, sort_keys=True))
    print("stats:", stats.to_json())
    print("oracle agrees:", oracle_query(net, query).members == comm.members)

    loose = query.replace(sigma=3.0, theta=0.1)
    comm, _ = answer_query(net, idx, loose)
    print("with sigma=3, theta=0.1:", [names[u] for u in comm.members])


if __name__ == "__main__":
    main()
