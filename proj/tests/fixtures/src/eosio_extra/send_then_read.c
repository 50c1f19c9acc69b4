#include "../eosio/eosio.h"

static u32 last_block;

EXPORT(apply) void apply(u64 receiver, u64 code, u64 action)
{
    if (code != receiver || action != N_CLAIM)
        return;
    pay(receiver, N_EOSIO, 1);
    last_block = tapos_block_num();
}
