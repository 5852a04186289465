public class Fib3 {
    public static int calFib(int num){
        int fib1=0, fib2=1;
        int t=0;
        if((num == 1) || (num == 0)) return num;
        for (int k =2; k<=num; k++){
            t=fib1+fib2; fib1=fib2; fib2=t;
        }
        return t;
    }
}
