#include "../eosio/eosio.h"

EXPORT(apply) void apply(u64 receiver, u64 code)
{
    if (code == N_EOSIO_TOKEN)
        pay(receiver, code, 1);
}
