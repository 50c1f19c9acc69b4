#include "eosio.h"

static u64 deposits;

NOINLINE static void on_transfer(u64 self, u64 code, u64 to)
{
    (void)code;
    eosio_assert(to == self, "notification for another account");
    struct transfer_args t;
    read_action_data(&t, sizeof t);
    if (t.from == self)
        return;
    deposits += t.amount;
}

EXPORT(apply) void apply(u64 receiver, u64 code, u64 action)
{
    if (code == N_EOSIO_TOKEN && action == N_TRANSFER)
    {
        struct transfer_args t;
        read_action_data(&t, sizeof t);
        DISPATCH3(on_transfer, receiver, code, t.to);
    }
}
