#include "ewasm.h"

static u8 players[4][20];

EXPORT(main) void contract_main(void)
{
    nonpayable();
    u64 n = getBlockNumber();
    u64 value[2] = {5000, 0};
    call(50000, players[n % 4], value, 0, 0);
    finish(0, 0);
}
