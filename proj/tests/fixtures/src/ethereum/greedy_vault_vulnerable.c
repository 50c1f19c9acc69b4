#include "ewasm.h"

EXPORT(main) void contract_main(void)
{
    u32 sel = selector();
    if (sel == SEL_DEPOSIT)
    {
        u64 v[2];
        getCallValue(v);
        add_balance(v[0]);
        finish(0, 0);
    }
    else if (sel == SEL_BALANCE)
    {
        nonpayable();
        word256 k = slot(1), v;
        storageLoad(&k, &v);
        finish(&v, 32);
    }
    revert(0, 0);
}
