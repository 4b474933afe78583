var balance = 10;
var purse = def({
  getBalance: () => balance,
  makePurse: () => balance,
  deposit: (amount, srcP) => balance
});
