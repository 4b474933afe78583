var balance = initAmt;
balance += amount;
